#include <doctest.h>

#include "dtp/attention_core.hpp"
#include "dtp/planted_policy.hpp"
#include "dtp/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace dtp;

namespace {

ModelConfig small_config(std::uint64_t seed) {
  ModelConfig c;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_model = 8;
  c.grid_h = 3;
  c.grid_w = 3;
  c.action_vocab = 4;
  c.prompt_vocab = 5;
  c.seed = seed;
  return c;
}

TokenSequence random_sequence(const ModelConfig &c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix visual(c.num_visual(), c.d_model);
  for (int i = 0; i < visual.size(); ++i)
    visual.data()[i] = rng.normal();
  const std::vector<int> prompt{1, 3, 0};
  return TokenSequence::build(c, prompt, visual);
}

bool bit_equal(const Vector &a, const Vector &b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

} // namespace

TEST_CASE("model construction is seeded") {
  const Model a = build_model(small_config(7));
  const Model b = build_model(small_config(7));
  const Model c = build_model(small_config(8));
  const TokenSequence seq = random_sequence(small_config(7), 99);
  CHECK(bit_equal(forward(a, seq).logits, forward(b, seq).logits));
  CHECK_FALSE(bit_equal(forward(a, seq).logits, forward(c, seq).logits));
  for (const auto &l : a.layers)
    CHECK(l.wq.allFinite());
}

TEST_CASE("config validation") {
  ModelConfig c = small_config(1);
  c.d_model = 7;
  CHECK_THROWS_AS(build_model(c), ConfigError);
  c = small_config(1);
  c.grid_h = 1;
  c.grid_w = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(1);
  c.action_vocab = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(1);
  c.n_layers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("token layout") {
  for (Layout layout : {Layout::image_before_prompt, Layout::prompt_before_image}) {
    ModelConfig c = small_config(1);
    c.layout = layout;
    const TokenSequence seq = random_sequence(c, 1);
    CHECK(seq.length() == 1 + 9 + 3 + 1);
    CHECK(seq.visual_positions().size() == 9);
    int expected = 0;
    for (const Segment &s : seq.segments()) {
      CHECK(s.start == expected);
      expected += s.role == Role::image ? 9 : static_cast<int>(s.token_ids.size());
    }
    CHECK(expected == seq.length());
    CHECK(seq.segments().front().role == Role::system);
    CHECK(seq.segments().back().role == Role::action);
    const bool image_first = seq.visual_positions().front() < seq.prompt_positions().front();
    CHECK(image_first == (layout == Layout::image_before_prompt));
  }
}

TEST_CASE("attention rows are causal and stochastic") {
  const Model model = build_model(small_config(3));
  const TokenSequence seq = random_sequence(model.config, 5);
  const PruneMask mask({2, 7});
  for (const PruneMask *m : {static_cast<const PruneMask *>(nullptr), &mask}) {
    const ForwardResult r = forward(model, seq, m);
    REQUIRE(r.capture.n_layers() == 2);
    REQUIRE(r.capture.n_heads() == 2);
    for (const auto &layer : r.capture.attn)
      for (const RowMatrix &a : layer)
        for (int i = 0; i < a.rows(); ++i) {
          CHECK(std::abs(a.row(i).sum() - 1.0) < 1e-6);
          for (int j = i + 1; j < a.cols(); ++j)
            CHECK(a(i, j) == 0.0);
          CHECK((a.row(i).array() >= 0.0).all());
        }
    for (const Matrix &v : r.capture.values) {
      CHECK(v.rows() == 9);
      CHECK(v.allFinite());
    }
    CHECK(r.capture.query_row == seq.length() - 1);
  }
}

TEST_CASE("empty mask is the identity") {
  const Model model = build_model(small_config(4));
  const TokenSequence seq = random_sequence(model.config, 6);
  const PruneMask empty;
  CHECK(bit_equal(forward(model, seq).logits, forward(model, seq, &empty).logits));
}

TEST_CASE("pruned column receives no attention anywhere") {
  const Model model = build_model(small_config(5));
  const TokenSequence seq = random_sequence(model.config, 8);
  const int v = 4;
  const PruneMask mask({v});
  const ForwardResult r = forward(model, seq, &mask);
  const int col = seq.visual_positions()[v];
  for (const auto &layer : r.capture.attn)
    for (const RowMatrix &a : layer)
      CHECK((a.col(col).array() == 0.0).all());
}

TEST_CASE("first-layer rows renormalize over survivors") {
  // Layer 0 sees the same inputs with or without the mask, so its masked
  // rows must equal the unmasked rows with pruned columns removed.
  const Model model = build_model(small_config(9));
  const TokenSequence seq = random_sequence(model.config, 10);
  const PruneMask mask({0, 5, 8});
  const ForwardResult full = forward(model, seq);
  const ForwardResult cut = forward(model, seq, &mask);
  const auto vis = seq.visual_positions();
  for (int h = 0; h < 2; ++h) {
    const RowMatrix &a = full.capture.attn[0][h];
    const RowMatrix &b = cut.capture.attn[0][h];
    for (int i = 0; i < a.rows(); ++i) {
      double kept = 0.0;
      for (int j = 0; j <= i; ++j) {
        bool pruned = false;
        for (int p : mask.indices())
          pruned = pruned || vis[p] == j;
        if (!pruned)
          kept += a(i, j);
      }
      for (int j = 0; j <= i; ++j) {
        bool pruned = false;
        for (int p : mask.indices())
          pruned = pruned || vis[p] == j;
        const double expected = pruned ? 0.0 : a(i, j) / kept;
        CHECK(std::abs(b(i, j) - expected) < 1e-12);
      }
    }
  }
}

TEST_CASE("masked forward is idempotent and masks are validated") {
  const Model model = build_model(small_config(11));
  const TokenSequence seq = random_sequence(model.config, 12);
  const PruneMask mask({1, 3});
  CHECK(bit_equal(forward(model, seq, &mask).logits, forward(model, seq, &mask).logits));

  std::vector<int> all(9);
  for (int i = 0; i < 9; ++i)
    all[i] = i;
  const PruneMask everything(all);
  CHECK_THROWS_AS(forward(model, seq, &everything), UsageError);
  const PruneMask outside({9});
  CHECK_THROWS_AS(forward(model, seq, &outside), UsageError);
  CHECK(PruneMask({3, 1, 3}).indices() == std::vector<int>{1, 3});
}

TEST_CASE("greedy decoding tie-break") {
  Vector a(3);
  a << 0.1, 0.9, 0.3;
  CHECK(argmax_lowest(a) == 1);
  Vector b(2);
  b << 0.5, 0.5;
  CHECK(argmax_lowest(b) == 0);

  const Model model = build_model(small_config(13));
  const TokenSequence seq = random_sequence(model.config, 14);
  const Generation g = generate_action_token(model, seq);
  CHECK(g.token == argmax_lowest(g.logits));
  CHECK(g.capture.query_row == seq.length() - 1);
}

TEST_CASE("appended action tokens move the query row") {
  const Model model = build_model(small_config(15));
  TokenSequence seq = random_sequence(model.config, 16);
  const int before = seq.length();
  seq.append_action(2);
  CHECK(seq.length() == before + 1);
  CHECK(generate_action_token(model, seq).capture.query_row == before);
}

TEST_CASE("salience-free planted policy acts optimally") {
  const Model model = build_planted_policy(planted_model_config(), 0.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    TaskSpec spec = planted_task_spec();
    spec.seed = seed;
    spec.salience_min = spec.salience_max = 0.0;
    WorldState w = init_world(spec);
    while (!is_success(w) && w.step_count < w.max_steps) {
      const TokenSequence seq =
          TokenSequence::build(model.config, spec.prompt_ids, render_tokens(w));
      const auto act = static_cast<Action>(generate_action_token(model, seq).token);
      const auto oracle = oracle_actions(w);
      REQUIRE(std::find(oracle.begin(), oracle.end(), act) != oracle.end());
      w = step(w, act);
    }
    CHECK(is_success(w));
  }
}
