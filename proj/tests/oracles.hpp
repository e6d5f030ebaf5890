#pragma once

// Independent reference implementations: plain loops over std::vector,
// no shared code with the library beyond its data types.

#include "dtp/attention_core.hpp"
#include "dtp/rng.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

namespace oracle {

/// Causal row-stochastic random attention for a sequence laid out as
/// [system, M image, P prompt, query].
inline dtp::AttentionCapture random_capture(dtp::Rng &rng, int n_layers, int n_heads,
                                            int m, int p, int grid_w = 0) {
  const int s = 1 + m + p + 1;
  dtp::AttentionCapture cap;
  cap.attn.resize(n_layers);
  for (int l = 0; l < n_layers; ++l)
    for (int h = 0; h < n_heads; ++h) {
      dtp::RowMatrix a = dtp::RowMatrix::Zero(s, s);
      for (int i = 0; i < s; ++i) {
        double z = 0.0;
        for (int j = 0; j <= i; ++j) {
          // occasional exact zeros exercise the a > 0 boundary
          a(i, j) = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
          z += a(i, j);
        }
        if (z == 0.0) {
          a(i, 0) = 1.0;
          z = 1.0;
        }
        for (int j = 0; j <= i; ++j)
          a(i, j) /= z;
      }
      cap.attn[l].push_back(a);
    }
  for (int v = 0; v < m; ++v)
    cap.visual_positions.push_back(1 + v);
  for (int i = 0; i < p; ++i)
    cap.prompt_positions.push_back(1 + m + i);
  cap.query_row = s - 1;
  cap.grid_w = grid_w > 0 ? grid_w : m;
  cap.grid_h = m / cap.grid_w;
  return cap;
}

/// r[i][v] = (1/H) sum_h A_h[p_i, V_v]
inline std::vector<std::vector<double>> prompt_relevance(const dtp::AttentionCapture &cap,
                                                         int layer) {
  const int heads = static_cast<int>(cap.attn[layer].size());
  std::vector<std::vector<double>> out;
  for (int p : cap.prompt_positions) {
    std::vector<double> r;
    for (int v : cap.visual_positions) {
      double acc = 0.0;
      for (int h = 0; h < heads; ++h)
        acc += cap.attn[layer][h](p, v);
      r.push_back(acc / heads);
    }
    out.push_back(r);
  }
  return out;
}

/// R[v] = (1/|C|) sum_c (1/|P|) sum_i r[c][i][v]
inline std::vector<double>
aggregate(const std::vector<std::vector<std::vector<double>>> &per_layer) {
  const std::size_t m = per_layer[0][0].size();
  std::vector<double> out(m, 0.0);
  for (const auto &layer : per_layer) {
    std::vector<double> mean(m, 0.0);
    for (const auto &r : layer)
      for (std::size_t v = 0; v < m; ++v)
        mean[v] += r[v];
    for (std::size_t v = 0; v < m; ++v)
      out[v] += mean[v] / layer.size();
  }
  for (auto &x : out)
    x /= per_layer.size();
  return out;
}

/// Cosine mapped to [0, 1]; zero norm counts as cosine 0.
inline double mapped_cosine(const std::vector<double> &a, const std::vector<double> &b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double c = (na == 0.0 || nb == 0.0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
  return 0.5 * (c + 1.0);
}

struct Pattern {
  std::vector<double> a;
  std::vector<double> w;
};

/// A = sum_l w_l A^l with A^l the head mean of the query row over the image
/// and w_l each layer's share of the total.
inline Pattern pattern(const dtp::AttentionCapture &cap) {
  const int layers = static_cast<int>(cap.attn.size());
  const int m = static_cast<int>(cap.visual_positions.size());
  const int q = *cap.query_row;
  std::vector<std::vector<double>> per(layers, std::vector<double>(m, 0.0));
  std::vector<double> sums(layers, 0.0);
  for (int l = 0; l < layers; ++l) {
    const int heads = static_cast<int>(cap.attn[l].size());
    for (int v = 0; v < m; ++v) {
      for (int h = 0; h < heads; ++h)
        per[l][v] += cap.attn[l][h](q, cap.visual_positions[v]);
      per[l][v] /= heads;
      sums[l] += per[l][v];
    }
  }
  double total = 0.0;
  for (double s : sums)
    total += s;
  Pattern out;
  out.a.assign(m, 0.0);
  for (int l = 0; l < layers; ++l) {
    const double w = total > 0.0 ? sums[l] / total : 1.0 / layers;
    out.w.push_back(w);
    for (int v = 0; v < m; ++v)
      out.a[v] += w * per[l][v];
  }
  return out;
}

/// Two-sided exact Mann-Whitney p by enumerating every split of the pooled
/// sample, with U counted pairwise (ties score one half).
inline double mann_whitney_enumerated(const std::vector<double> &xs,
                                      const std::vector<double> &ys,
                                      double *u_out = nullptr) {
  const int n1 = static_cast<int>(xs.size());
  const int n2 = static_cast<int>(ys.size());
  const int n = n1 + n2;
  std::vector<double> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  // 2U as an integer
  auto twice_u = [&](std::uint32_t mask) {
    long u2 = 0;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1u))
        continue;
      for (int j = 0; j < n; ++j) {
        if (mask >> j & 1u)
          continue;
        u2 += pooled[i] > pooled[j] ? 2 : (pooled[i] == pooled[j] ? 1 : 0);
      }
    }
    return u2;
  };
  const std::uint32_t observed_mask = (1u << n1) - 1u;
  const long centre = static_cast<long>(n1) * n2; // 2 * n1 n2 / 2
  const long observed = std::labs(twice_u(observed_mask) - centre);
  if (u_out)
    *u_out = 0.5 * static_cast<double>(twice_u(observed_mask));
  long hits = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != n1)
      continue;
    ++total;
    if (std::labs(twice_u(mask) - centre) >= observed)
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

/// Direct 2-D convolution with a normalized Gaussian of radius ceil(3 sigma)
/// and half-sample reflection, no separability.
inline std::vector<double> smooth_direct(const std::vector<double> &grid, int h, int w,
                                         double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double z = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j)
      z += std::exp(-0.5 * (i * i + j * j) / (sigma * sigma));
  auto reflect = [](int x, int n) {
    while (x < 0 || x >= n)
      x = x < 0 ? -x - 1 : 2 * n - x - 1;
    return x;
  };
  std::vector<double> out(grid.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
          out[y * w + x] += std::exp(-0.5 * (i * i + j * j) / (sigma * sigma)) / z *
                            grid[reflect(y + i, h) * w + reflect(x + j, w)];
  return out;
}

inline double max_abs_diff(const dtp::Vector &a, const std::vector<double> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    d = std::max(d, std::abs(a[static_cast<int>(i)] - b[i]));
  return d;
}

} // namespace oracle
