#pragma once

#include "dtp/attention_core.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace dtp {

/// Hyperparameters of the detect-prune loop.
struct DtpConfig {
  std::vector<int> selected_layers{0, 1};
  int top_k = 12;
  double gaussian_sigma = 0.65;
  int corner_window = 1;
  double corner_factor = 0.25;
  double tolerance = 0.5;
  std::optional<int> max_prune;
  bool reuse_first_mask = false;

  void validate(const ModelConfig &model) const;
};

struct RelevanceHeatmap {
  Vector r;
  int grid_h = 0;
  int grid_w = 0;

  int size() const { return static_cast<int>(r.size()); }
  /// Row-major grid view.
  Eigen::Map<const RowMatrix> grid() const {
    return {r.data(), grid_h, grid_w};
  }
};

/// Top-k visual tokens (G) and their complement.
struct ImportantRegion {
  std::vector<int> important;
  std::vector<int> unimportant;
  std::vector<char> in_important; ///< indexed by grid cell

  bool contains(int v) const { return in_important[v] != 0; }
  int num_visual() const { return static_cast<int>(in_important.size()); }
};

/// Head-mean attention from each prompt token to every visual token at
/// `layer`. Requires prompt tokens to come after the image.
std::vector<Vector> compute_prompt_relevance(const AttentionCapture &capture,
                                             int layer,
                                             std::span<const int> prompt_positions,
                                             std::span<const int> visual_positions);

/// Cosine similarity between layer hidden states of each prompt token and
/// every visual token, mapped from [-1, 1] to [0, 1]. Zero-norm pairs score
/// as cosine 0.
std::vector<Vector> compute_embedding_relevance(std::span<const Matrix> hidden,
                                                int layer,
                                                std::span<const int> prompt_positions,
                                                std::span<const int> visual_positions);

/// Flat mean over layers, then prompt tokens.
RelevanceHeatmap
aggregate_relevance(const std::vector<std::vector<Vector>> &per_layer_per_prompt,
                    int grid_h, int grid_w);

/// Corner down-weighting followed by Gaussian smoothing.
RelevanceHeatmap apply_spatial_bias(const RelevanceHeatmap &heatmap,
                                    const DtpConfig &cfg);

/// k largest entries, ties toward the lower grid index.
ImportantRegion select_important_region(const RelevanceHeatmap &heatmap, int k);

/// Region from a membership list; used by the exporters and tests.
ImportantRegion make_region(int num_visual, std::span<const int> important);

/// Full relevance pipeline over cfg.selected_layers, choosing the attention
/// or embedding path from the capture layout.
RelevanceHeatmap build_relevance(const AttentionCapture &capture,
                                 const DtpConfig &cfg);

ImportantRegion build_important_region(const AttentionCapture &capture,
                                       const DtpConfig &cfg,
                                       bool spatial_bias = true);

// ---------------------------------------------------------------------------
// Grid kernels

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
inline Vector gaussian_kernel(Scalar sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Vector k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  return k / k.sum();
}

/// Half-sample symmetric reflection of index x into [0, n).
inline int reflect_index(int x, int n) {
  const int period = 2 * n;
  x %= period;
  if (x < 0)
    x += period;
  return x < n ? x : period - 1 - x;
}

/// Separable convolution with reflect padding. Preserves total mass
/// exactly up to rounding.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic,
              Eigen::RowMajor>
gaussian_smooth(const Eigen::MatrixBase<Derived> &grid, Scalar sigma) {
  using S = typename Derived::Scalar;
  using Out = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Vector kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int rows = static_cast<int>(grid.rows());
  const int cols = static_cast<int>(grid.cols());

  Out horizontal = Out::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (int o = -radius; o <= radius; ++o)
        horizontal(i, j) += kernel[o + radius] * grid(i, reflect_index(j + o, cols));

  Out out = Out::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (int o = -radius; o <= radius; ++o)
        out(i, j) += kernel[o + radius] * horizontal(reflect_index(i + o, rows), j);
  return out;
}

} // namespace dtp
