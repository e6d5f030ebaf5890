#include "dtp/attention_core.hpp"

#include "dtp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dtp {

void ModelConfig::validate() const {
  if (n_layers < 1)
    throw ConfigError("n_layers must be >= 1");
  if (n_heads < 1)
    throw ConfigError("n_heads must be >= 1");
  if (d_model < 1 || d_model % n_heads != 0)
    throw ConfigError("d_model (" + std::to_string(d_model) +
                      ") must be a positive multiple of n_heads (" +
                      std::to_string(n_heads) + ")");
  if (grid_h < 1 || grid_w < 1 || num_visual() < 4)
    throw ConfigError("image grid must hold at least 4 tokens");
  if (action_vocab < 2)
    throw ConfigError("action_vocab must be >= 2");
  if (prompt_vocab < 1)
    throw ConfigError("prompt_vocab must be >= 1");
}

TokenSequence TokenSequence::build(const ModelConfig &config,
                                   std::span<const int> prompt_ids,
                                   const Matrix &visual_embeddings) {
  config.validate();
  const int m = config.num_visual();
  if (visual_embeddings.rows() != m || visual_embeddings.cols() != config.d_model)
    throw ConfigError("visual embeddings must be M x d");
  for (int id : prompt_ids)
    if (id < 0 || id >= config.prompt_vocab)
      throw ConfigError("prompt token id out of vocabulary");

  TokenSequence seq;
  seq.layout_ = config.layout;
  seq.visual_ = visual_embeddings;

  std::vector<int> image_ids(m);
  for (int v = 0; v < m; ++v)
    image_ids[v] = v;

  Segment image{Role::image, std::move(image_ids)};
  Segment prompt{Role::prompt, {prompt_ids.begin(), prompt_ids.end()}};
  seq.segments_.push_back({Role::system, {0}});
  if (config.layout == Layout::image_before_prompt) {
    seq.segments_.push_back(std::move(image));
    seq.segments_.push_back(std::move(prompt));
  } else {
    seq.segments_.push_back(std::move(prompt));
    seq.segments_.push_back(std::move(image));
  }
  seq.segments_.push_back({Role::action, {config.action_vocab}});

  int pos = 0;
  for (auto &s : seq.segments_) {
    s.start = pos;
    pos += static_cast<int>(s.token_ids.size());
  }
  seq.length_ = pos;
  return seq;
}

const Segment &TokenSequence::segment(Role role) const {
  for (const auto &s : segments_)
    if (s.role == role)
      return s;
  throw UsageError("sequence has no segment with the requested role");
}

std::vector<int> TokenSequence::positions(Role role) const {
  const Segment &s = segment(role);
  std::vector<int> out(s.token_ids.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = s.start + static_cast<int>(i);
  return out;
}

void TokenSequence::append_action(int token_id) {
  if (segments_.empty() || segments_.back().role != Role::action)
    throw UsageError("sequence does not end with an action segment");
  segments_.back().token_ids.push_back(token_id);
  ++length_;
}

PruneMask::PruneMask(std::vector<int> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

bool PruneMask::contains(int v) const {
  return std::binary_search(indices_.begin(), indices_.end(), v);
}

void PruneMask::validate(int num_visual) const {
  for (int v : indices_)
    if (v < 0 || v >= num_visual)
      throw UsageError("prune index " + std::to_string(v) + " outside [0, " +
                       std::to_string(num_visual) + ")");
  if (static_cast<int>(indices_.size()) >= num_visual)
    throw UsageError("a prune mask may not cover every visual token");
}

namespace {

Matrix gaussian_matrix(Rng &rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      m(i, j) = scale * rng.normal();
  return m;
}

Vector gaussian_vector(Rng &rng, int n, double scale) {
  return gaussian_matrix(rng, n, 1, scale);
}

Matrix embed_sequence(const Model &model, const TokenSequence &seq) {
  const int d = model.config.d_model;
  Matrix x(seq.length(), d);
  for (const auto &s : seq.segments()) {
    for (std::size_t i = 0; i < s.token_ids.size(); ++i) {
      const int row = s.start + static_cast<int>(i);
      const int id = s.token_ids[i];
      switch (s.role) {
      case Role::system:
        x.row(row) = model.system_embed.transpose();
        break;
      case Role::image:
        x.row(row) = seq.visual_embeddings().row(id);
        break;
      case Role::prompt:
        x.row(row) = model.prompt_embed.row(id);
        break;
      case Role::action:
        if (id < 0 || id > model.config.action_vocab)
          throw UsageError("action token id out of vocabulary");
        x.row(row) = model.action_embed.row(id);
        break;
      }
    }
  }
  return x;
}

} // namespace

Model build_model(const ModelConfig &config) {
  config.validate();
  Rng rng(config.seed);
  const int d = config.d_model;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));

  Model model;
  model.config = config;
  model.system_embed = gaussian_vector(rng, d, 1.0);
  model.prompt_embed = gaussian_matrix(rng, config.prompt_vocab, d, 1.0);
  model.action_embed = gaussian_matrix(rng, config.action_vocab + 1, d, 1.0);
  for (int l = 0; l < config.n_layers; ++l) {
    LayerWeights w;
    w.wq = gaussian_matrix(rng, d, d, s);
    w.wk = gaussian_matrix(rng, d, d, s);
    w.wv = gaussian_matrix(rng, d, d, s);
    w.wo = gaussian_matrix(rng, d, d, s);
    w.w1 = gaussian_matrix(rng, d, d, s);
    w.b1 = gaussian_vector(rng, d, 0.1);
    w.w2 = gaussian_matrix(rng, d, d, s);
    w.b2 = gaussian_vector(rng, d, 0.1);
    model.layers.push_back(std::move(w));
  }
  model.readout = gaussian_matrix(rng, d, config.action_vocab, s);
  model.readout_bias = Vector::Zero(config.action_vocab);
  return model;
}

ForwardResult forward(const Model &model, const TokenSequence &seq,
                      const PruneMask *mask) {
  const ModelConfig &cfg = model.config;
  const int m = cfg.num_visual();
  const int n_seq = seq.length();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const std::vector<int> visual_pos = seq.visual_positions();
  if (static_cast<int>(visual_pos.size()) != m)
    throw UsageError("image segment must contain exactly M tokens");

  std::vector<char> blocked(n_seq, 0);
  if (mask != nullptr) {
    mask->validate(m);
    for (int v : mask->indices())
      blocked[visual_pos[v]] = 1;
  }

  ForwardResult out;
  AttentionCapture &cap = out.capture;
  cap.visual_positions = visual_pos;
  cap.prompt_positions = seq.prompt_positions();
  cap.grid_h = cfg.grid_h;
  cap.grid_w = cfg.grid_w;
  cap.attn.resize(cfg.n_layers);
  cap.values.resize(cfg.n_layers);
  cap.hidden.resize(cfg.n_layers);

  Matrix x = embed_sequence(model, seq);
  Vector row_buf(n_seq);
  const int query = n_seq - 1;

  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights &w = model.layers[l];
    cap.hidden[l] = x;
    const Matrix q = x * w.wq;
    const Matrix k = x * w.wk;
    const Matrix v = x * w.wv;

    Matrix &vis_values = cap.values[l];
    vis_values.resize(m, cfg.d_model);
    for (int i = 0; i < m; ++i)
      vis_values.row(i) = v.row(visual_pos[i]);

    // The last layer only feeds the logits through the query row.
    const bool last = l + 1 == cfg.n_layers;
    const int first_row = last ? query : 0;
    const int n_rows = last ? 1 : n_seq;
    Matrix mixed(n_rows, cfg.d_model);
    cap.attn[l].resize(cfg.n_heads);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto qh = q.middleCols(h * dh, dh);
      const auto kh = k.middleCols(h * dh, dh);
      const RowMatrix scores = (qh * kh.transpose()) * scale;

      RowMatrix &a = cap.attn[l][h];
      a.setZero(n_seq, n_seq);
      for (int i = 0; i < n_seq; ++i) {
        auto row = row_buf.head(i + 1);
        row = scores.row(i).head(i + 1).transpose();
        if (mask != nullptr)
          for (int j = 0; j <= i; ++j)
            if (blocked[j])
              row[j] = -std::numeric_limits<double>::infinity();
        row = (row.array() - row.maxCoeff()).exp();
        // Eigen's vectorized exp clamps -inf to a denormal, not zero.
        if (mask != nullptr)
          for (int j = 0; j <= i; ++j)
            if (blocked[j])
              row[j] = 0.0;
        a.row(i).head(i + 1) = row.transpose() / row.sum();
      }
      mixed.middleCols(h * dh, dh).noalias() =
          a.middleRows(first_row, n_rows) * v.middleCols(h * dh, dh);
    }

    Matrix xs = x.middleRows(first_row, n_rows);
    xs.noalias() += mixed * w.wo;
    Matrix hidden = xs * w.w1;
    hidden.rowwise() += w.b1.transpose();
    hidden = hidden.cwiseMax(0.0);
    xs.noalias() += hidden * w.w2;
    xs.rowwise() += w.b2.transpose();
    x.middleRows(first_row, n_rows) = xs;
  }

  cap.query_row = query;
  out.logits = model.readout.transpose() * x.row(query).transpose() +
               model.readout_bias;
  return out;
}

int argmax_lowest(const Vector &logits) {
  if (logits.size() == 0)
    throw UsageError("argmax of an empty vector");
  int best = 0;
  for (int i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best])
      best = i;
  return best;
}

Generation generate_action_token(const Model &model, const TokenSequence &seq,
                                 const PruneMask *mask) {
  ForwardResult f = forward(model, seq, mask);
  Generation g;
  g.token = argmax_lowest(f.logits);
  g.logits = std::move(f.logits);
  g.capture = std::move(f.capture);
  return g;
}

} // namespace dtp
