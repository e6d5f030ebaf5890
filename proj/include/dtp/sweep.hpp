#pragma once

#include "dtp/episode.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace dtp {

struct SuiteSummary {
  int episodes = 0;
  double success_rate = 0.0;
  double grasp_rate = 0.0;
  double mean_p_alpha = 0.0;     ///< over non-degenerate steps
  double mean_prune_count = 0.0; ///< pruned tokens per step
  double clamped_fraction = 0.0; ///< among non-degenerate steps
  int scored_steps = 0;
};

SuiteSummary summarize(std::span<const EpisodeLog> logs);

struct TauSweepRow {
  double tau = 0.0;
  SuiteSummary summary;
};

struct TauSweepResult {
  std::vector<TauSweepRow> rows;
  SuiteSummary baseline;
  double tau_hat = 0.0;
  std::size_t tau_hat_index = 0;
};

/// Runs the suite with strategy=dtp at every tolerance. tau_hat maximizes
/// success; ties go to the larger tolerance.
TauSweepResult tau_sweep(const Model &model, const TaskSpec &base, int episodes,
                         std::uint64_t seed_base, std::span<const double> tau_grid,
                         const DtpConfig &dtp_base);

/// Parses "start:stop:step" (inclusive stop) or a comma-separated list.
std::vector<double> parse_tau_grid(std::string_view text);

} // namespace dtp
