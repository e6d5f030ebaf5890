#include "dtp/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace dtp {

double conditional_entropy(const Vector &logits) {
  if (logits.size() == 0 || !logits.allFinite())
    throw UsageError("entropy needs finite, non-empty logits");
  const Vector shifted = logits.array() - logits.maxCoeff();
  const Vector w = shifted.array().exp();
  const double z = w.sum();
  double h = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    const double p = w[i] / z;
    if (p > 0.0)
      h -= p * (shifted[i] - std::log(z));
  }
  return std::max(h, 0.0);
}

double baseline_entropy(std::size_t oracle_size, int action_vocab) {
  if (oracle_size == 0 || static_cast<int>(oracle_size) > action_vocab)
    throw UsageError("oracle set must be non-empty and within the vocabulary");
  return std::log(static_cast<double>(oracle_size));
}

EntropyEstimate performance_score(double e_alpha, double h_star) {
  EntropyEstimate est;
  est.e_alpha = e_alpha;
  est.h_star = h_star;
  if (!(h_star > 0.0)) {
    est.degenerate = true;
    return est;
  }
  const double raw = 1.0 - e_alpha / h_star;
  est.p_alpha = std::clamp(raw, 0.0, 1.0);
  est.clamped = raw != est.p_alpha;
  return est;
}

} // namespace dtp
