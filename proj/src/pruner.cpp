#include "dtp/pruner.hpp"

#include "dtp/rng.hpp"

#include <algorithm>
#include <numeric>

namespace dtp {

PruneDecision detect_distracting_tokens(const VisualAttentionPattern &pattern,
                                        const ImportantRegion &region,
                                        double tolerance) {
  if (pattern.a.size() != region.num_visual())
    throw UsageError("pattern and region disagree on M");
  PruneDecision d;
  for (int v : region.important)
    d.a_m = std::max(d.a_m, pattern.a[v]);
  d.threshold = tolerance * d.a_m;
  if (!(d.a_m > 0.0)) {
    d.skipped = true;
    return d;
  }
  for (int v : region.unimportant) {
    if (pattern.a[v] > d.threshold) {
      d.distracting.push_back(v);
      d.distracting_attention.push_back(pattern.a[v]);
    }
  }
  return d;
}

PruneMask apply_prune_policy(PruneDecision &decision, const DtpConfig &cfg) {
  if (decision.skipped)
    return {};
  const std::size_t n = decision.distracting.size();
  if (!cfg.max_prune || n <= static_cast<std::size_t>(*cfg.max_prune))
    return PruneMask(decision.distracting);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return decision.distracting_attention[a] > decision.distracting_attention[b];
  });
  std::vector<int> kept;
  for (int i = 0; i < *cfg.max_prune; ++i)
    kept.push_back(decision.distracting[order[i]]);
  decision.capped = true;
  return PruneMask(std::move(kept));
}

Generation regenerate_with_pruning(const Model &model, const TokenSequence &seq,
                                   const PruneMask &mask) {
  return generate_action_token(model, seq, &mask);
}

PruneMask sample_random_prune(const ImportantRegion &region, std::size_t count,
                              PruneScope scope, std::uint64_t seed) {
  std::vector<int> pool;
  if (scope == PruneScope::unimportant_region) {
    pool = region.unimportant;
  } else {
    pool.resize(region.num_visual());
    std::iota(pool.begin(), pool.end(), 0);
  }
  std::size_t limit = pool.size();
  if (scope == PruneScope::all_region && limit > 0)
    limit -= 1;
  Rng rng(seed);
  return PruneMask(rng.sample_without_replacement(std::move(pool),
                                                  std::min(count, limit)));
}

DtpStep run_dtp_step(const Model &model, const TokenSequence &seq,
                     const ImportantRegion &region, const DtpConfig &cfg) {
  DtpStep step;
  step.baseline = generate_action_token(model, seq);
  step.forward_passes = 1;
  step.pattern = build_attention_pattern(step.baseline.capture);
  step.decision = detect_distracting_tokens(step.pattern, region, cfg.tolerance);
  step.mask = apply_prune_policy(step.decision, cfg);
  if (step.mask.empty()) {
    step.refined = step.baseline;
  } else {
    step.refined = regenerate_with_pruning(model, seq, step.mask);
    ++step.forward_passes;
  }
  return step;
}

ChunkResult decode_chunk(const Model &model, TokenSequence seq, int n_tokens,
                         const ImportantRegion &region, const DtpConfig &cfg) {
  ChunkResult out;
  for (int t = 0; t < n_tokens; ++t) {
    int token = 0;
    if (t > 0 && cfg.reuse_first_mask) {
      const PruneMask &mask = out.masks.front();
      token = generate_action_token(model, seq, mask.empty() ? nullptr : &mask)
                  .token;
      out.masks.push_back(mask);
      ++out.forward_passes;
    } else {
      DtpStep step = run_dtp_step(model, seq, region, cfg);
      token = step.refined.token;
      out.masks.push_back(std::move(step.mask));
      out.forward_passes += step.forward_passes;
      ++out.detection_passes;
    }
    out.tokens.push_back(token);
    seq.append_action(token);
  }
  return out;
}

} // namespace dtp
