#pragma once

#include "dtp/types.hpp"

#include <cstddef>

namespace dtp {

/// Conditional uncertainty E, the baseline uncertainty H* and the normalized
/// score P = 1 - E / H*, all in nats.
struct EntropyEstimate {
  double e_alpha = 0.0;
  double h_star = 0.0;
  double p_alpha = 0.0;
  bool clamped = false;
  /// H* == 0: a single correct action, so P is undefined.
  bool degenerate = false;
};

/// Shannon entropy of softmax(logits).
double conditional_entropy(const Vector &logits);

/// ln |oracle set|, treating every successful action as equally likely.
double baseline_entropy(std::size_t oracle_size, int action_vocab);

/// P clamped into [0, 1]; flags clamping and the degenerate H* = 0 case.
EntropyEstimate performance_score(double e_alpha, double h_star);

} // namespace dtp
