#pragma once

#include "dtp/config.hpp"
#include "dtp/statistics.hpp"
#include "dtp/sweep.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace dtp {

/// Process exit codes of the CLI.
enum ExitStatus : int {
  exit_ok = 0,
  exit_error = 1,
  exit_usage = 2,
  exit_insufficient_data = 3,
};

struct DemoReport {
  EpisodeLog log;
  std::vector<std::filesystem::path> files;
};

/// One episode (strategy from the config, dtp by default) with per-step
/// graymaps of relevance, important region, attention pattern and prune
/// mask under <out>/demo, a scale sidecar and a JSONL log.
DemoReport cmd_demo(const RunConfig &config);

/// Writes <out>/sweep.csv: a baseline row, then one row per tolerance with
/// the argmax row flagged. Throws UsageError on an empty grid.
TauSweepResult cmd_sweep(const RunConfig &config);

struct AblationRow {
  Strategy strategy;
  SuiteSummary summary;
  std::optional<double> relative_success; ///< vs off; absent if off never succeeds
};

/// All five strategies on the same seeds at the configured tolerance.
/// Writes <out>/ablation.csv.
std::vector<AblationRow> cmd_ablate(const RunConfig &config);

struct AnalysisReport {
  int success_episodes = 0;
  int failure_episodes = 0;
  std::optional<GroupStats> stats; ///< absent: insufficient data, nothing written
};

/// Unimportant attention of success vs failure episodes (strategy off by
/// default). Writes <out>/analysis.csv and <out>/curves.txt.
AnalysisReport cmd_analyze(const RunConfig &config);

} // namespace dtp
