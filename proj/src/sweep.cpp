#include "dtp/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace dtp {

SuiteSummary summarize(std::span<const EpisodeLog> logs) {
  SuiteSummary s;
  s.episodes = static_cast<int>(logs.size());
  if (logs.empty())
    return s;
  int successes = 0, grasps = 0, steps = 0, clamped = 0;
  double pruned = 0.0, p_total = 0.0;
  for (const auto &log : logs) {
    successes += log.success;
    grasps += log.grasp;
    for (const auto &rec : log.steps) {
      ++steps;
      pruned += static_cast<double>(rec.pruned.size());
      if (rec.entropy.degenerate)
        continue;
      ++s.scored_steps;
      p_total += rec.entropy.p_alpha;
      clamped += rec.entropy.clamped;
    }
  }
  s.success_rate = static_cast<double>(successes) / s.episodes;
  s.grasp_rate = static_cast<double>(grasps) / s.episodes;
  s.mean_prune_count = steps > 0 ? pruned / steps : 0.0;
  if (s.scored_steps > 0) {
    s.mean_p_alpha = p_total / s.scored_steps;
    s.clamped_fraction = static_cast<double>(clamped) / s.scored_steps;
  }
  return s;
}

TauSweepResult tau_sweep(const Model &model, const TaskSpec &base, int episodes,
                         std::uint64_t seed_base, std::span<const double> tau_grid,
                         const DtpConfig &dtp_base) {
  if (tau_grid.empty())
    throw UsageError("tolerance grid must not be empty");
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end()))
    throw UsageError("tolerance grid must be sorted ascending");

  TauSweepResult out;
  out.baseline = summarize(
      run_suite(model, base, episodes, seed_base, dtp_base, Strategy::off));
  for (double tau : tau_grid) {
    DtpConfig cfg = dtp_base;
    cfg.tolerance = tau;
    out.rows.push_back(
        {tau, summarize(run_suite(model, base, episodes, seed_base, cfg,
                                  Strategy::dtp))});
  }
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    if (out.rows[i].summary.success_rate >=
        out.rows[out.tau_hat_index].summary.success_rate)
      out.tau_hat_index = i;
  out.tau_hat = out.rows[out.tau_hat_index].tau;
  return out;
}

namespace {

double parse_double(std::string_view s) {
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != buf.size())
    throw UsageError("cannot parse number '" + buf + "'");
  return v;
}

} // namespace

std::vector<double> parse_tau_grid(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos)
      throw UsageError("tolerance grid must be start:stop:step");
    const double start = parse_double(text.substr(0, a));
    const double stop = parse_double(text.substr(a + 1, b - a - 1));
    const double stepv = parse_double(text.substr(b + 1));
    if (!(stepv > 0.0) || stop < start)
      throw UsageError("tolerance grid needs step > 0 and stop >= start");
    const long n = std::lround(std::floor((stop - start) / stepv + 1e-9));
    // 0.1 * 3 is 0.30000000000000004; snap grid points to 12 decimals
    for (long i = 0; i <= n; ++i)
      out.push_back(std::round((start + static_cast<double>(i) * stepv) * 1e12) / 1e12);
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const auto part = text.substr(pos, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - pos);
      if (!part.empty())
        out.push_back(parse_double(part));
      if (comma == std::string_view::npos)
        break;
      pos = comma + 1;
    }
  }
  if (out.empty())
    throw UsageError("tolerance grid must not be empty");
  return out;
}

} // namespace dtp
