#include "dtp/pattern.hpp"

namespace dtp {

Vector extract_layer_pattern(const AttentionCapture &capture, int layer) {
  if (!capture.query_row)
    throw UsageError("capture has no query row");
  if (layer < 0 || layer >= capture.n_layers())
    throw UsageError("layer out of range");
  const int row = *capture.query_row;
  const int m = capture.num_visual();
  const auto &heads = capture.attn[layer];
  Vector out = Vector::Zero(m);
  for (const auto &a : heads)
    for (int v = 0; v < m; ++v)
      out[v] += a(row, capture.visual_positions[v]);
  return out / static_cast<double>(heads.size());
}

LayerWeighting compute_layer_weights(const AttentionCapture &capture) {
  const int n = capture.n_layers();
  Vector sums(n);
  for (int l = 0; l < n; ++l)
    sums[l] = extract_layer_pattern(capture, l).sum();
  const double total = sums.sum();
  if (!(total > 0.0))
    return {Vector::Constant(n, 1.0 / n), true};
  return {sums / total, false};
}

VisualAttentionPattern build_attention_pattern(const AttentionCapture &capture) {
  const LayerWeighting lw = compute_layer_weights(capture);
  VisualAttentionPattern p;
  p.a = Vector::Zero(capture.num_visual());
  for (int l = 0; l < capture.n_layers(); ++l)
    p.a += lw.weights[l] * extract_layer_pattern(capture, l);
  p.layer_weights = lw.weights;
  p.degenerate = lw.degenerate;
  p.token_index = *capture.query_row;
  return p;
}

} // namespace dtp
