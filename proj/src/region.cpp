#include "dtp/region.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace dtp {

void DtpConfig::validate(const ModelConfig &model) const {
  if (selected_layers.empty())
    throw ConfigError("selected_layers must not be empty");
  for (int c : selected_layers)
    if (c < 0 || c >= model.n_layers)
      throw ConfigError("selected layer " + std::to_string(c) +
                        " outside [0, " + std::to_string(model.n_layers) + ")");
  if (top_k < 1 || top_k > model.num_visual())
    throw ConfigError("top_k must lie in [1, M]");
  if (!(gaussian_sigma > 0.0))
    throw ConfigError("gaussian_sigma must be positive");
  if (corner_window < 0)
    throw ConfigError("corner_window must be >= 0");
  if (corner_factor < 0.0 || corner_factor > 1.0)
    throw ConfigError("corner_factor must lie in [0, 1]");
  if (!(tolerance >= 0.0))
    throw ConfigError("tolerance must be >= 0");
  if (max_prune && *max_prune < 0)
    throw ConfigError("max_prune must be >= 0");
}

std::vector<Vector> compute_prompt_relevance(const AttentionCapture &capture,
                                             int layer,
                                             std::span<const int> prompt_positions,
                                             std::span<const int> visual_positions) {
  if (layer < 0 || layer >= capture.n_layers())
    throw ConfigError("relevance layer out of range");
  const int last_visual =
      *std::max_element(visual_positions.begin(), visual_positions.end());
  for (int p : prompt_positions)
    if (p <= last_visual)
      throw LayoutError("prompt tokens precede image tokens and cannot attend "
                        "to them; use the embedding-similarity relevance");

  const auto &heads = capture.attn[layer];
  const int m = static_cast<int>(visual_positions.size());
  std::vector<Vector> out;
  out.reserve(prompt_positions.size());
  for (int p : prompt_positions) {
    Vector r = Vector::Zero(m);
    for (const auto &a : heads)
      for (int v = 0; v < m; ++v)
        r[v] += a(p, visual_positions[v]);
    out.push_back(r / static_cast<double>(heads.size()));
  }
  return out;
}

std::vector<Vector> compute_embedding_relevance(std::span<const Matrix> hidden,
                                                int layer,
                                                std::span<const int> prompt_positions,
                                                std::span<const int> visual_positions) {
  if (layer < 0 || layer >= static_cast<int>(hidden.size()))
    throw ConfigError("relevance layer out of range");
  const Matrix &h = hidden[layer];
  const int m = static_cast<int>(visual_positions.size());
  std::vector<Vector> out;
  out.reserve(prompt_positions.size());
  for (int p : prompt_positions) {
    const auto ep = h.row(p);
    const double np = ep.norm();
    Vector r(m);
    for (int v = 0; v < m; ++v) {
      const auto ev = h.row(visual_positions[v]);
      const double denom = np * ev.norm();
      const double cosine = denom > 0.0 ? ep.dot(ev) / denom : 0.0;
      r[v] = 0.5 * (std::clamp(cosine, -1.0, 1.0) + 1.0);
    }
    out.push_back(std::move(r));
  }
  return out;
}

RelevanceHeatmap
aggregate_relevance(const std::vector<std::vector<Vector>> &per_layer_per_prompt,
                    int grid_h, int grid_w) {
  if (per_layer_per_prompt.empty())
    throw ConfigError("relevance aggregation needs at least one layer");
  const int m = grid_h * grid_w;
  Vector total = Vector::Zero(m);
  for (const auto &layer : per_layer_per_prompt) {
    if (layer.empty())
      throw ConfigError("relevance aggregation needs at least one prompt token");
    Vector layer_sum = Vector::Zero(m);
    for (const Vector &r : layer) {
      if (r.size() != m)
        throw ConfigError("relevance vector length must equal M");
      layer_sum += r;
    }
    total += layer_sum / static_cast<double>(layer.size());
  }
  return {total / static_cast<double>(per_layer_per_prompt.size()), grid_h,
          grid_w};
}

RelevanceHeatmap apply_spatial_bias(const RelevanceHeatmap &heatmap,
                                    const DtpConfig &cfg) {
  RowMatrix grid = heatmap.grid();
  const int rows = heatmap.grid_h;
  const int cols = heatmap.grid_w;
  const int c = std::min({cfg.corner_window, rows, cols});

  // Overlapping windows on tiny grids are suppressed once.
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> hit =
      Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows, cols);
  hit.topLeftCorner(c, c).setOnes();
  hit.topRightCorner(c, c).setOnes();
  hit.bottomLeftCorner(c, c).setOnes();
  hit.bottomRightCorner(c, c).setOnes();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (hit(i, j))
        grid(i, j) *= cfg.corner_factor;

  const RowMatrix smoothed = gaussian_smooth(grid, cfg.gaussian_sigma);
  RelevanceHeatmap out{Vector(rows * cols), rows, cols};
  Eigen::Map<RowMatrix>(out.r.data(), rows, cols) = smoothed.cwiseMax(0.0);
  return out;
}

ImportantRegion make_region(int num_visual, std::span<const int> important) {
  ImportantRegion region;
  region.in_important.assign(num_visual, 0);
  for (int v : important) {
    if (v < 0 || v >= num_visual)
      throw ConfigError("region index out of range");
    region.in_important[v] = 1;
  }
  for (int v = 0; v < num_visual; ++v)
    (region.in_important[v] ? region.important : region.unimportant).push_back(v);
  return region;
}

ImportantRegion select_important_region(const RelevanceHeatmap &heatmap, int k) {
  const int m = heatmap.size();
  if (k < 1 || k > m)
    throw ConfigError("k must lie in [1, M]");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return heatmap.r[a] > heatmap.r[b];
  });
  order.resize(k);
  return make_region(m, order);
}

RelevanceHeatmap build_relevance(const AttentionCapture &capture,
                                 const DtpConfig &cfg) {
  const auto &prompts = capture.prompt_positions;
  const auto &visual = capture.visual_positions;
  const bool attention_path =
      !prompts.empty() && prompts.front() > visual.back();
  std::vector<std::vector<Vector>> per_layer;
  for (int c : cfg.selected_layers) {
    if (attention_path)
      per_layer.push_back(compute_prompt_relevance(capture, c, prompts, visual));
    else
      per_layer.push_back(
          compute_embedding_relevance(capture.hidden, c, prompts, visual));
  }
  return aggregate_relevance(per_layer, capture.grid_h, capture.grid_w);
}

ImportantRegion build_important_region(const AttentionCapture &capture,
                                       const DtpConfig &cfg, bool spatial_bias) {
  RelevanceHeatmap r = build_relevance(capture, cfg);
  if (spatial_bias)
    r = apply_spatial_bias(r, cfg);
  return select_important_region(r, cfg.top_k);
}

} // namespace dtp
