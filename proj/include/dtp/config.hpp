#pragma once

#include "dtp/attention_core.hpp"
#include "dtp/planted_policy.hpp"
#include "dtp/region.hpp"
#include "dtp/simworld.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace dtp {

enum class PolicyKind { planted, random };

/// Everything a CLI command needs. Serialized as flat [section] key=value
/// text in a fixed key order.
struct RunConfig {
  PolicyKind policy = PolicyKind::planted;
  ModelConfig model = planted_model_config();
  PlantedParams planted;
  DtpConfig dtp;
  TaskSpec task = planted_task_spec();

  int episodes = 200;
  std::uint64_t seed = 0;
  std::string strategy; ///< empty: the command's own default
  int bins = 10;
  std::string tau_grid = "0:3:0.1";

  std::filesystem::path out_dir = "out";
  bool export_heatmaps = true;
  bool export_masks = true;
  bool export_logs = true;

  /// Grid and embedding size follow the task; throws ConfigError.
  void validate() const;
  Model build_model() const;
};

/// Named tolerance/region bundles for the three reference VLA setups.
/// Throws ConfigError for unknown names.
DtpConfig dtp_preset(std::string_view name);

/// Missing keys keep their defaults. A `preset` key in [dtp] is applied
/// before the other [dtp] keys. Throws ConfigError on malformed input.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path &path);

/// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string serialize_config(const RunConfig &config);

/// Shortest decimal that parses back to the same double.
std::string format_number(double x);

} // namespace dtp
