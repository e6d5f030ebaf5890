#pragma once

#include "dtp/attention_core.hpp"

namespace dtp {

/// Layer-weighted attention from one generated token to the image grid.
struct VisualAttentionPattern {
  Vector a;
  Vector layer_weights;
  int token_index = 0;
  /// Set when no layer attended the image at all and the weights fell back
  /// to uniform.
  bool degenerate = false;
};

struct LayerWeighting {
  Vector weights;
  bool degenerate = false;
};

/// Head-mean of the query row restricted to visual columns.
Vector extract_layer_pattern(const AttentionCapture &capture, int layer);

/// Each layer's share of the total visual attention.
LayerWeighting compute_layer_weights(const AttentionCapture &capture);

VisualAttentionPattern build_attention_pattern(const AttentionCapture &capture);

} // namespace dtp
