#pragma once

#include "dtp/episode.hpp"
#include "dtp/pattern.hpp"
#include "dtp/region.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dtp {

/// Total attention the pattern puts outside the important region.
double unimportant_attention(const VisualAttentionPattern &pattern,
                             const ImportantRegion &region);

struct MannWhitneyResult {
  double u = 0.0; ///< U statistic of the first sample
  double p_value = 1.0; ///< two-sided
  bool exact = false;
};

/// Largest n1 * n2 for which the exact null distribution is enumerated.
inline constexpr std::size_t kExactBudget = 5000;

/// Midrank U test. Exact two-sided p from the permutation distribution when
/// n1 * n2 <= kExactBudget, else the tie-corrected normal approximation
/// with continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> xs,
                                 std::span<const double> ys);

/// Per-bin means over normalized episode time; bins with no samples are
/// empty optionals.
struct TimeCurve {
  std::vector<std::optional<double>> mean;
  std::vector<int> count;
};

/// Maps step i of an n-step episode to t = i / (n - 1) (t = 0 when n = 1),
/// bins with [b/B, (b+1)/B) and a closed last bin, and averages the
/// per-step unimportant attention.
TimeCurve normalize_episode_time(std::span<const EpisodeLog> logs, int bins);

/// Bin index for normalized time t.
int time_bin(double t, int bins);

struct GroupStats {
  std::vector<double> success_values;
  std::vector<double> failure_values;
  MannWhitneyResult test; ///< U is for the failure group
  double success_median = 0.0;
  double failure_median = 0.0;
  TimeCurve success_curve;
  TimeCurve failure_curve;
};

/// Splits episodes by outcome and compares their unimportant attention.
/// Returns nothing when either group has fewer than two episodes.
std::optional<GroupStats> compare_groups(std::span<const EpisodeLog> logs,
                                         int bins);

double median(std::vector<double> values);

} // namespace dtp
