#pragma once

#include "dtp/attention_core.hpp"
#include "dtp/entropy.hpp"
#include "dtp/pattern.hpp"
#include "dtp/pruner.hpp"
#include "dtp/region.hpp"
#include "dtp/simworld.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace dtp {

enum class Strategy { off, dtp, random_all, random_unimportant, no_gaussian };

std::string_view strategy_name(Strategy s);
/// Throws UsageError on an unknown name.
Strategy parse_strategy(std::string_view name);

struct StepRecord {
  int step = 0;
  Action action = Action::noop;          ///< executed
  Action baseline_action = Action::noop; ///< unpruned model output
  PruneDecision decision;                ///< targeted detection at this step
  std::vector<int> pruned;               ///< mask actually applied
  double unimportant_attention = 0.0;    ///< from the unpruned pattern
  Vector logits;                         ///< logits of the executed token
  int oracle_size = 0;
  EntropyEstimate entropy;
  int forward_passes = 0;
  std::optional<Vector> pattern;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::off;
  double tolerance = 0.0;
  std::vector<StepRecord> steps;
  bool success = false;
  bool grasp = false;
  int steps_taken = 0;

  std::size_t total_pruned() const;
};

/// Per-step intermediate products, handed to EpisodeOptions::on_step.
struct StepTrace {
  int step = 0;
  const WorldState *world = nullptr;
  const RelevanceHeatmap *relevance = nullptr; ///< after spatial bias, if used
  const ImportantRegion *region = nullptr;
  const VisualAttentionPattern *pattern = nullptr;
  const PruneMask *mask = nullptr;
};

struct EpisodeOptions {
  bool keep_patterns = false;
  std::function<void(const StepTrace &)> on_step;
};

/// Render, generate, build region and pattern, prune per strategy,
/// regenerate and execute, until success or max_steps.
EpisodeLog run_episode(const Model &model, const TaskSpec &spec,
                       const DtpConfig &dtp, Strategy strategy,
                       const EpisodeOptions &options = {});

/// Episodes use seeds seed_base, seed_base + 1, ...
std::vector<EpisodeLog> run_suite(const Model &model, const TaskSpec &base,
                                  int episodes, std::uint64_t seed_base,
                                  const DtpConfig &dtp, Strategy strategy);

} // namespace dtp
