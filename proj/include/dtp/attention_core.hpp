#pragma once

#include "dtp/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dtp {

enum class Layout { prompt_before_image, image_before_prompt };

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 2;
  int d_model = 32;
  int grid_h = 8;
  int grid_w = 8;
  int action_vocab = 7;
  int prompt_vocab = 8;
  Layout layout = Layout::image_before_prompt;
  std::uint64_t seed = 0;

  int num_visual() const { return grid_h * grid_w; }
  int head_dim() const { return d_model / n_heads; }

  /// Throws ConfigError on inconsistent dimensions.
  void validate() const;
};

enum class Role { system, image, prompt, action };

struct Segment {
  Role role;
  std::vector<int> token_ids;
  int start = 0; ///< absolute position of the first token
};

/// Ordered multimodal token stream. Image tokens carry their embeddings
/// directly (one row per grid cell); the other roles are looked up in the
/// model's embedding tables.
class TokenSequence {
public:
  /// Lays out system, image, prompt and one action-query token according to
  /// `config.layout`.
  static TokenSequence build(const ModelConfig &config,
                             std::span<const int> prompt_ids,
                             const Matrix &visual_embeddings);

  const std::vector<Segment> &segments() const { return segments_; }
  int length() const { return length_; }
  Layout layout() const { return layout_; }
  const Matrix &visual_embeddings() const { return visual_; }

  const Segment &segment(Role role) const;
  std::vector<int> positions(Role role) const;
  std::vector<int> visual_positions() const { return positions(Role::image); }
  std::vector<int> prompt_positions() const { return positions(Role::prompt); }

  /// Appends a generated action token to the trailing action segment.
  void append_action(int token_id);

private:
  std::vector<Segment> segments_;
  Matrix visual_;
  Layout layout_ = Layout::image_before_prompt;
  int length_ = 0;
};

/// Set of pruned visual-token grid indices (sorted, unique).
class PruneMask {
public:
  PruneMask() = default;
  explicit PruneMask(std::vector<int> indices);

  const std::vector<int> &indices() const { return indices_; }
  bool empty() const { return indices_.empty(); }
  std::size_t size() const { return indices_.size(); }
  bool contains(int v) const;

  /// Throws UsageError if an index is outside [0, num_visual) or every
  /// visual token would be pruned.
  void validate(int num_visual) const;

  friend bool operator==(const PruneMask &, const PruneMask &) = default;

private:
  std::vector<int> indices_;
};

/// Everything an attention hook would see during one forward pass.
struct AttentionCapture {
  /// attn[l][h] is S x S, row-stochastic over unmasked causal entries.
  std::vector<std::vector<RowMatrix>> attn;
  /// values[l] is M x d: the value vectors of the visual tokens at layer l.
  std::vector<Matrix> values;
  /// hidden[l] is S x d: residual stream entering layer l.
  std::vector<Matrix> hidden;
  std::optional<int> query_row;
  std::vector<int> visual_positions;
  std::vector<int> prompt_positions;
  int grid_h = 0;
  int grid_w = 0;

  int n_layers() const { return static_cast<int>(attn.size()); }
  int n_heads() const { return attn.empty() ? 0 : static_cast<int>(attn[0].size()); }
  int num_visual() const { return static_cast<int>(visual_positions.size()); }
};

struct LayerWeights {
  // Row-vector convention: Q = X * wq.
  Matrix wq, wk, wv, wo;
  Matrix w1, w2;
  Vector b1, b2;
};

struct Model {
  ModelConfig config;
  Vector system_embed;
  Matrix prompt_embed; ///< prompt_vocab x d
  Matrix action_embed; ///< (action_vocab + 1) x d; last row is the query token
  std::vector<LayerWeights> layers;
  Matrix readout; ///< d x action_vocab
  Vector readout_bias;

  int action_query_id() const { return config.action_vocab; }
};

/// Seeded Gaussian weights; identical config and seed give identical bits.
Model build_model(const ModelConfig &config);

struct ForwardResult {
  Vector logits;
  AttentionCapture capture;
};

/// One instrumented pass. Pruned visual tokens have their attention logits
/// set to -inf in every row of every head before the softmax.
ForwardResult forward(const Model &model, const TokenSequence &seq,
                      const PruneMask *mask = nullptr);

/// Greedy argmax; ties go to the lowest id.
int argmax_lowest(const Vector &logits);

struct Generation {
  int token = 0;
  Vector logits;
  AttentionCapture capture;
};

Generation generate_action_token(const Model &model, const TokenSequence &seq,
                                 const PruneMask *mask = nullptr);

} // namespace dtp
