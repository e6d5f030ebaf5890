#include "dtp/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace dtp {

double unimportant_attention(const VisualAttentionPattern &pattern,
                             const ImportantRegion &region) {
  if (pattern.a.size() != region.num_visual())
    throw UsageError("pattern and region disagree on M");
  double total = 0.0;
  for (int v : region.unimportant)
    total += pattern.a[v];
  return total;
}

namespace {

/// Doubled midranks (integers) of the pooled sample, first xs then ys.
std::vector<long> doubled_midranks(std::span<const double> xs,
                                   std::span<const double> ys,
                                   std::vector<long> &tie_sizes) {
  const std::size_t n = xs.size() + ys.size();
  std::vector<double> pooled(xs.begin(), xs.end());
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<long> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]])
      ++j;
    // ranks i+1 .. j+1, doubled midrank = (i+1) + (j+1)
    const long doubled = static_cast<long>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t)
      ranks[order[t]] = doubled;
    tie_sizes.push_back(static_cast<long>(j - i + 1));
    i = j + 1;
  }
  return ranks;
}

/// Exact two-sided p via the distribution of doubled rank sums over all
/// size-`chosen` subsets of the pooled ranks.
double exact_p(const std::vector<long> &ranks, std::size_t chosen,
               long observed_doubled_sum) {
  const long max_sum = std::accumulate(ranks.begin(), ranks.end(), 0L);
  // counts[j][s]: number of j-subsets with doubled rank sum s
  std::vector<std::vector<double>> counts(
      chosen + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  counts[0][0] = 1.0;
  for (long r : ranks)
    for (std::size_t j = chosen; j >= 1; --j) {
      auto &dst = counts[j];
      const auto &src = counts[j - 1];
      for (long s = max_sum; s >= r; --s)
        dst[s] += src[s - r];
    }
  const auto &dist = counts[chosen];
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  // E[doubled sum] = chosen * (n + 1); compare doubled distances exactly.
  const long n = static_cast<long>(ranks.size());
  const long centre2 = static_cast<long>(chosen) * (n + 1);
  const long observed = std::labs(observed_doubled_sum - centre2);
  double tail = 0.0;
  for (long s = 0; s <= max_sum; ++s)
    if (dist[s] > 0.0 && std::labs(s - centre2) >= observed)
      tail += dist[s];
  return std::clamp(tail / total, 0.0, 1.0);
}

} // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> xs,
                                 std::span<const double> ys) {
  if (xs.empty() || ys.empty())
    throw UsageError("Mann-Whitney U needs two non-empty samples");
  const double n1 = static_cast<double>(xs.size());
  const double n2 = static_cast<double>(ys.size());
  std::vector<long> ties;
  const std::vector<long> ranks = doubled_midranks(xs, ys, ties);
  const long r1_doubled =
      std::accumulate(ranks.begin(), ranks.begin() + xs.size(), 0L);

  MannWhitneyResult res;
  res.u = 0.5 * static_cast<double>(r1_doubled) - n1 * (n1 + 1.0) / 2.0;

  if (xs.size() * ys.size() <= kExactBudget) {
    res.exact = true;
    // Enumerate subsets of the smaller group's size; the two-sided tail is
    // symmetric in which group is labelled first.
    if (xs.size() <= ys.size()) {
      res.p_value = exact_p(ranks, xs.size(), r1_doubled);
    } else {
      const long r2_doubled =
          std::accumulate(ranks.begin() + xs.size(), ranks.end(), 0L);
      res.p_value = exact_p(ranks, ys.size(), r2_doubled);
    }
    return res;
  }

  const double n = n1 + n2;
  double tie_term = 0.0;
  for (long t : ties)
    tie_term += static_cast<double>(t) * t * t - t;
  const double var =
      n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double dev = std::max(0.0, std::abs(res.u - n1 * n2 / 2.0) - 0.5);
  const double z = dev / std::sqrt(var);
  res.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  return res;
}

int time_bin(double t, int bins) {
  const int b = static_cast<int>(std::floor(t * bins));
  return std::clamp(b, 0, bins - 1);
}

TimeCurve normalize_episode_time(std::span<const EpisodeLog> logs, int bins) {
  if (bins < 2)
    throw UsageError("time normalization needs at least two bins");
  std::vector<double> sums(bins, 0.0);
  TimeCurve curve;
  curve.count.assign(bins, 0);
  for (const auto &log : logs) {
    const std::size_t n = log.steps.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
      const int b = time_bin(t, bins);
      sums[b] += log.steps[i].unimportant_attention;
      ++curve.count[b];
    }
  }
  curve.mean.resize(bins);
  for (int b = 0; b < bins; ++b)
    if (curve.count[b] > 0)
      curve.mean[b] = sums[b] / curve.count[b];
  return curve;
}

double median(std::vector<double> values) {
  if (values.empty())
    return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1)
    return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::optional<GroupStats> compare_groups(std::span<const EpisodeLog> logs,
                                         int bins) {
  std::vector<EpisodeLog> success, failure;
  for (const auto &log : logs)
    (log.success ? success : failure).push_back(log);
  if (success.size() < 2 || failure.size() < 2)
    return std::nullopt;

  GroupStats g;
  for (const auto &log : success)
    for (const auto &s : log.steps)
      g.success_values.push_back(s.unimportant_attention);
  for (const auto &log : failure)
    for (const auto &s : log.steps)
      g.failure_values.push_back(s.unimportant_attention);
  g.test = mann_whitney_u(g.failure_values, g.success_values);
  g.success_median = median(g.success_values);
  g.failure_median = median(g.failure_values);
  g.success_curve = normalize_episode_time(success, bins);
  g.failure_curve = normalize_episode_time(failure, bins);
  return g;
}

} // namespace dtp
