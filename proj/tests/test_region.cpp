#include <doctest.h>

#include "dtp/region.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <numeric>

using namespace dtp;

namespace {

RelevanceHeatmap heatmap(std::vector<double> values, int h, int w) {
  RelevanceHeatmap r;
  r.r = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  r.grid_h = h;
  r.grid_w = w;
  return r;
}

AttentionCapture hand_capture() {
  // system, 3 image tokens, 1 prompt token, query: S = 6
  AttentionCapture cap;
  cap.visual_positions = {1, 2, 3};
  cap.prompt_positions = {4};
  cap.query_row = 5;
  cap.grid_h = 1;
  cap.grid_w = 3;
  RowMatrix a = RowMatrix::Zero(6, 6), b = RowMatrix::Zero(6, 6);
  for (int i = 0; i < 6; ++i)
    a(i, 0) = b(i, 0) = 1.0;
  a.row(4).setZero();
  b.row(4).setZero();
  a.row(4).segment(1, 3) << 0.2, 0.3, 0.5;
  b.row(4).segment(1, 3) << 0.4, 0.1, 0.5;
  cap.attn = {{a, b}};
  return cap;
}

} // namespace

TEST_CASE("prompt relevance is the head mean") {
  const AttentionCapture cap = hand_capture();
  const auto r = compute_prompt_relevance(cap, 0, cap.prompt_positions, cap.visual_positions);
  REQUIRE(r.size() == 1);
  CHECK(r[0][0] == doctest::Approx(0.3));
  CHECK(r[0][1] == doctest::Approx(0.2));
  CHECK(r[0][2] == doctest::Approx(0.5));
}

TEST_CASE("uniform heads give uniform relevance") {
  AttentionCapture cap = hand_capture();
  for (auto &a : cap.attn[0]) {
    a.row(4).setZero();
    a.row(4).segment(1, 3).setConstant(0.25);
    a(4, 0) = 0.25;
  }
  const auto r = compute_prompt_relevance(cap, 0, cap.prompt_positions, cap.visual_positions);
  for (int v = 0; v < 3; ++v)
    CHECK(r[0][v] == doctest::Approx(0.25));
}

TEST_CASE("prompt relevance matches the loop oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const AttentionCapture cap = oracle::random_capture(rng, 2, 2, 9, 3, 3);
    for (int l = 0; l < 2; ++l) {
      const auto got = compute_prompt_relevance(cap, l, cap.prompt_positions, cap.visual_positions);
      const auto want = oracle::prompt_relevance(cap, l);
      for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(oracle::max_abs_diff(got[i], want[i]) <= 1e-12);
    }
  }
}

TEST_CASE("prompt-first layout has no prompt-to-image attention") {
  AttentionCapture cap = hand_capture();
  cap.prompt_positions = {1};
  cap.visual_positions = {2, 3, 4};
  CHECK_THROWS_AS(
      compute_prompt_relevance(cap, 0, cap.prompt_positions, cap.visual_positions),
      LayoutError);
}

TEST_CASE("embedding relevance") {
  Matrix hidden = Matrix::Zero(4, 2);
  hidden.row(0) << 1.0, 1.0;  // prompt
  hidden.row(1) << 2.0, 2.0;  // parallel
  hidden.row(2) << 1.0, -1.0; // orthogonal
  hidden.row(3) << 0.0, 0.0;  // zero norm
  const std::vector<Matrix> layers{hidden};
  const std::vector<int> prompt{0}, visual{1, 2, 3};
  const auto r = compute_embedding_relevance(layers, 0, prompt, visual);
  CHECK(r[0][0] == doctest::Approx(1.0));
  CHECK(r[0][1] == doctest::Approx(0.5));
  CHECK(r[0][2] == 0.5);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix h(6, 8);
    for (int i = 0; i < h.size(); ++i)
      h.data()[i] = rng.normal();
    const std::vector<Matrix> hs{h};
    const std::vector<int> p{4, 5}, v{0, 1, 2, 3};
    const auto got = compute_embedding_relevance(hs, 0, p, v);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) {
        std::vector<double> a(h.cols()), b(h.cols());
        for (int k = 0; k < h.cols(); ++k) {
          a[k] = h(p[i], k);
          b[k] = h(v[j], k);
        }
        CHECK(std::abs(got[i][j] - oracle::mapped_cosine(a, b)) <= 1e-12);
      }
  }
}

TEST_CASE("aggregation is a flat mean") {
  Vector a(2), b(2);
  a << 0.2, 0.8;
  b << 0.4, 0.6;
  const RelevanceHeatmap r = aggregate_relevance({{a, b}}, 1, 2);
  CHECK(r.r[0] == doctest::Approx(0.3));
  CHECK(r.r[1] == doctest::Approx(0.7));
  CHECK((aggregate_relevance({{a}}, 1, 2).r.array() == a.array()).all());
  CHECK_THROWS_AS(aggregate_relevance({}, 1, 2), ConfigError);
  CHECK_THROWS_AS(aggregate_relevance({{}}, 1, 2), ConfigError);

  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<Vector>> in(3);
    std::vector<std::vector<std::vector<double>>> ref(3);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 2; ++i) {
        Vector v(6);
        std::vector<double> w(6);
        for (int k = 0; k < 6; ++k)
          w[k] = v[k] = rng.uniform();
        in[c].push_back(v);
        ref[c].push_back(w);
      }
    const RelevanceHeatmap got = aggregate_relevance(in, 2, 3);
    CHECK(oracle::max_abs_diff(got.r, oracle::aggregate(ref)) <= 1e-12);
    // permutation invariance over C and P
    std::swap(in[0], in[2]);
    std::swap(in[1][0], in[1][1]);
    CHECK((aggregate_relevance(in, 2, 3).r - got.r).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("spatial bias") {
  DtpConfig cfg;
  cfg.corner_factor = 1.0;

  SUBCASE("uniform field is a fixed point") {
    const RelevanceHeatmap u = heatmap(std::vector<double>(20, 0.7), 4, 5);
    const RelevanceHeatmap out = apply_spatial_bias(u, cfg);
    CHECK((out.r.array() - 0.7).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("corners are scaled before smoothing") {
    cfg.corner_factor = 0.0;
    cfg.gaussian_sigma = 0.05; // taps beyond the centre are ~1e-87
    const RelevanceHeatmap u = heatmap(std::vector<double>(16, 1.0), 4, 4);
    const RelevanceHeatmap out = apply_spatial_bias(u, cfg);
    for (int v : {0, 3, 12, 15})
      CHECK(out.r[v] < 1e-12);
    CHECK(out.r[5] == doctest::Approx(1.0));
  }

  SUBCASE("wider corner window") {
    cfg.corner_factor = 0.5;
    cfg.corner_window = 2;
    cfg.gaussian_sigma = 0.05;
    const RelevanceHeatmap u = heatmap(std::vector<double>(36, 1.0), 6, 6);
    const RelevanceHeatmap out = apply_spatial_bias(u, cfg);
    int halved = 0;
    for (int v = 0; v < 36; ++v)
      halved += std::abs(out.r[v] - 0.5) < 1e-12;
    CHECK(halved == 16);
  }

  SUBCASE("spike mass is preserved") {
    cfg.gaussian_sigma = 0.65;
    std::vector<double> spike(64, 0.0);
    spike[9] = 1.0;
    const RelevanceHeatmap out = apply_spatial_bias(heatmap(spike, 8, 8), cfg);
    CHECK(std::abs(out.r.sum() - 1.0) < 1e-9);
    CHECK((out.r.array() >= 0.0).all());
  }

  SUBCASE("separable smoothing equals direct 2-D convolution") {
    Rng rng(23);
    for (double sigma : {0.3, 0.65, 0.9, 2.5}) {
      cfg.gaussian_sigma = sigma;
      std::vector<double> g(35);
      for (auto &x : g)
        x = rng.uniform();
      const RelevanceHeatmap out = apply_spatial_bias(heatmap(g, 5, 7), cfg);
      CHECK(oracle::max_abs_diff(out.r, oracle::smooth_direct(g, 5, 7, sigma)) < 1e-12);
    }
  }
}

TEST_CASE("reflect padding") {
  CHECK(reflect_index(-1, 4) == 0);
  CHECK(reflect_index(-2, 4) == 1);
  CHECK(reflect_index(4, 4) == 3);
  CHECK(reflect_index(5, 4) == 2);
  CHECK(reflect_index(-9, 4) == 0);
  CHECK(reflect_index(2, 1) == 0);
  const Vector k = gaussian_kernel(0.65);
  CHECK(k.size() == 2 * 2 + 1);
  CHECK(k.sum() == doctest::Approx(1.0));
}

TEST_CASE("top-k selection") {
  const RelevanceHeatmap r = heatmap({0.1, 0.9, 0.5, 0.5}, 2, 2);
  const ImportantRegion g = select_important_region(r, 2);
  CHECK(g.important == std::vector<int>{1, 2});
  CHECK(g.unimportant == std::vector<int>{0, 3});

  const ImportantRegion all = select_important_region(r, 4);
  CHECK(all.unimportant.empty());
  CHECK_THROWS_AS(select_important_region(r, 0), ConfigError);
  CHECK_THROWS_AS(select_important_region(r, 5), ConfigError);

  Rng rng(31);
  std::vector<double> big(256);
  for (auto &x : big)
    x = rng.uniform();
  const RelevanceHeatmap h = heatmap(big, 16, 16);
  const ImportantRegion g109 = select_important_region(h, 109);
  CHECK(g109.important.size() == 109);
  CHECK(g109.important.size() + g109.unimportant.size() == 256);

  RelevanceHeatmap scaled = h;
  scaled.r *= 37.5;
  CHECK(select_important_region(scaled, 109).important == g109.important);

  // every member of G outranks every member of the complement
  double lowest_in = 1e9, highest_out = -1e9;
  for (int v : g109.important)
    lowest_in = std::min(lowest_in, h.r[v]);
  for (int v : g109.unimportant)
    highest_out = std::max(highest_out, h.r[v]);
  CHECK(lowest_in >= highest_out);
}

TEST_CASE("config validation") {
  ModelConfig m;
  DtpConfig c;
  CHECK_NOTHROW(c.validate(m));
  c.selected_layers = {2};
  CHECK_THROWS_AS(c.validate(m), ConfigError);
  c = DtpConfig{};
  c.top_k = 65;
  CHECK_THROWS_AS(c.validate(m), ConfigError);
  c = DtpConfig{};
  c.gaussian_sigma = 0.0;
  CHECK_THROWS_AS(c.validate(m), ConfigError);
  c = DtpConfig{};
  c.tolerance = -0.1;
  CHECK_THROWS_AS(c.validate(m), ConfigError);
}

TEST_CASE("relevance path follows the layout") {
  ModelConfig mc;
  mc.d_model = 16;
  mc.grid_h = mc.grid_w = 3;
  mc.seed = 3;
  Rng rng(3);
  Matrix visual(9, 16);
  for (int i = 0; i < visual.size(); ++i)
    visual.data()[i] = rng.normal();
  const std::vector<int> prompt{0, 1, 2};
  DtpConfig cfg;
  cfg.top_k = 4;

  const Model after = build_model(mc);
  const auto cap_after = forward(after, TokenSequence::build(mc, prompt, visual)).capture;
  const RelevanceHeatmap ra = build_relevance(cap_after, cfg);
  std::vector<std::vector<std::vector<double>>> ref;
  for (int c : cfg.selected_layers)
    ref.push_back(oracle::prompt_relevance(cap_after, c));
  CHECK(oracle::max_abs_diff(ra.r, oracle::aggregate(ref)) < 1e-12);

  mc.layout = Layout::prompt_before_image;
  const Model before = build_model(mc);
  const auto cap_before = forward(before, TokenSequence::build(mc, prompt, visual)).capture;
  const RelevanceHeatmap rb = build_relevance(cap_before, cfg);
  CHECK(rb.size() == 9);
  CHECK((rb.r.array() >= 0.0).all());
  CHECK((rb.r.array() <= 1.0).all());
  CHECK(build_important_region(cap_before, cfg).important.size() == 4);
}
