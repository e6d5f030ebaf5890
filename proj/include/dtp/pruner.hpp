#pragma once

#include "dtp/attention_core.hpp"
#include "dtp/pattern.hpp"
#include "dtp/region.hpp"

#include <cstdint>
#include <vector>

namespace dtp {

struct PruneDecision {
  double a_m = 0.0;       ///< max attention inside the important region
  double threshold = 0.0; ///< tolerance * a_m
  std::vector<int> distracting;
  std::vector<double> distracting_attention; ///< parallel to `distracting`
  bool capped = false;
  bool skipped = false;
};

/// v is distracting iff it lies outside G and a[v] > tolerance * a_m.
PruneDecision detect_distracting_tokens(const VisualAttentionPattern &pattern,
                                        const ImportantRegion &region,
                                        double tolerance);

/// Applies the prune-count cap, keeping the most-attended distractors. Sets
/// `decision.capped` when the cap removed anything.
PruneMask apply_prune_policy(PruneDecision &decision, const DtpConfig &cfg);

/// One masked forward pass.
Generation regenerate_with_pruning(const Model &model, const TokenSequence &seq,
                                   const PruneMask &mask);

enum class PruneScope { all_region, unimportant_region };

/// Uniform sample without replacement; count is clamped to the scope size
/// (and below M for the whole-image scope).
PruneMask sample_random_prune(const ImportantRegion &region, std::size_t count,
                              PruneScope scope, std::uint64_t seed);

/// Baseline generation, detection and regeneration for one action token.
struct DtpStep {
  Generation baseline;
  VisualAttentionPattern pattern;
  PruneDecision decision;
  PruneMask mask;
  Generation refined;
  int forward_passes = 0;
};

DtpStep run_dtp_step(const Model &model, const TokenSequence &seq,
                     const ImportantRegion &region, const DtpConfig &cfg);

/// Autoregressive decoding of several action tokens for one observation.
struct ChunkResult {
  std::vector<int> tokens;
  std::vector<PruneMask> masks;
  int forward_passes = 0;
  int detection_passes = 0;
};

/// With cfg.reuse_first_mask the first token's mask is applied to every
/// later token and no further detection runs; otherwise each token gets its
/// own detect-prune-regenerate round.
ChunkResult decode_chunk(const Model &model, TokenSequence seq, int n_tokens,
                         const ImportantRegion &region, const DtpConfig &cfg);

} // namespace dtp
