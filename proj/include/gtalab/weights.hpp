// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "gtalab/config.hpp"
#include "gtalab/matrix.hpp"
#include "gtalab/prng.hpp"

namespace gtalab {

// All projection matrices for one layer of one mechanism. Members not used by
// the active mechanism stay empty (0x0 / empty vectors).
struct WeightSet {
  Matrix w_q;  // [hidden_dim, n_q * head_dim]   (mla: [hidden_dim, n_h * d_nope])
  Matrix w_k;  // [hidden_dim, n_k * head_dim]
  Matrix w_v;  // mha/gva: [hidden_dim, n_h * head_dim]; gqa: [., n_k * head_dim];
               // gha: [., n_c * head_dim] shared value sources
  Matrix w_c;  // gta: [hidden_dim, n_c * latent_dim]

  std::vector<Matrix> w_p;  // per head: gta [latent_dim, head_dim]; gha [head_dim, head_dim]
  std::vector<Matrix> w_g;  // per head, gta: [hidden_dim, head_dim] gate projection
  std::vector<Matrix> w_o;  // per head: [head_dim, hidden_dim] (mla: [d_nope, hidden_dim])

  Matrix w_dkv;              // mla: [hidden_dim, mla_d_c]
  Matrix w_kr;               // mla: [hidden_dim, mla_d_rope]
  std::vector<Matrix> w_uk;  // mla per head: [mla_d_c, mla_d_nope]
  std::vector<Matrix> w_uv;  // mla per head: [mla_d_c, mla_d_nope]
  std::vector<Matrix> w_qr;  // mla per head: [hidden_dim, mla_d_rope]

  // Per-head output projections stacked into the familiar concatenated form
  // [n_h * width, hidden_dim]; summing per-head products equals multiplying the
  // concatenated activations by this.
  Matrix w_o_concat() const {
    std::size_t width = 0;
    for (const Matrix& m : w_o) width += m.rows;
    Matrix out(width, w_o.empty() ? 0 : w_o.front().cols);
    std::size_t r0 = 0;
    for (const Matrix& m : w_o) {
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(r0 + r, c) = m(r, c);
      r0 += m.rows;
    }
    return out;
  }
};

// 0/1 matrix routing latent coordinates [slot * head_dim, slot * head_dim +
// head_dim), taken modulo latent_dim, onto the head_dim outputs. Column j has
// its single 1 at row (slot * head_dim + j) % latent_dim.
inline Matrix latent_selection(std::size_t latent_dim, std::size_t head_dim,
                               std::size_t slot) {
  Matrix s(latent_dim, head_dim);
  for (std::size_t j = 0; j < head_dim; ++j)
    s((slot * head_dim + j) % latent_dim, j) = 1.0;
  return s;
}

// Column rank via Gaussian elimination with partial pivoting.
inline std::size_t column_rank(const Matrix& m, double tol = 1e-8) {
  Matrix a = m;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < a.cols && rank < a.rows; ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < a.rows; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    if (std::fabs(a(pivot, col)) <= tol) continue;
    if (pivot != rank)
      for (std::size_t c = 0; c < a.cols; ++c) std::swap(a(rank, c), a(pivot, c));
    for (std::size_t r = 0; r < a.rows; ++r) {
      if (r == rank) continue;
      const double f = a(r, col) / a(rank, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < a.cols; ++c) a(r, c) -= f * a(rank, c);
    }
    ++rank;
  }
  return rank;
}

// Seeded Normal(0, 0.02^2) initialization. Matrices are filled row-major from
// one SplitMix64 stream in the order they are declared below, so the same seed
// always yields a bitwise-identical WeightSet.
//
// gta and gha decode projections start as selection + noise: head i maps the
// latent slice at slot i % (n_heads / n_c) onto its outputs, plus Normal noise.
// With latent_dim == head_dim the selection degenerates to the identity.
inline WeightSet init_weights(const AttentionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng(seed);
  auto fill = [&rng](Matrix& m) {
    for (double& v : m.data) v = 0.02 * rng.gaussian();
  };
  auto fresh = [&fill](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    fill(m);
    return m;
  };

  const std::size_t H = cfg.hidden_dim;
  const std::size_t n_h = cfg.n_heads;
  const std::size_t d_h = cfg.head_dim;
  WeightSet w;

  switch (cfg.mechanism) {
    case Mechanism::mha:
    case Mechanism::gva:
      w.w_q = fresh(H, cfg.n_q * d_h);
      w.w_k = fresh(H, cfg.n_k * d_h);
      w.w_v = fresh(H, n_h * d_h);
      for (std::size_t i = 0; i < n_h; ++i) w.w_o.push_back(fresh(d_h, H));
      break;
    case Mechanism::gqa:
      w.w_q = fresh(H, n_h * d_h);
      w.w_k = fresh(H, cfg.n_k * d_h);
      w.w_v = fresh(H, cfg.n_k * d_h);
      for (std::size_t i = 0; i < n_h; ++i) w.w_o.push_back(fresh(d_h, H));
      break;
    case Mechanism::gha: {
      w.w_q = fresh(H, cfg.n_q * d_h);
      w.w_k = fresh(H, cfg.n_k * d_h);
      w.w_v = fresh(H, cfg.n_c * d_h);
      const std::size_t per_group = n_h / cfg.n_c;
      for (std::size_t i = 0; i < n_h; ++i) {
        Matrix p = latent_selection(d_h, d_h, i % per_group);
        Matrix noise(d_h, d_h);
        fill(noise);
        w.w_p.push_back(add(p, noise));
        w.w_o.push_back(fresh(d_h, H));
      }
      break;
    }
    case Mechanism::gta: {
      w.w_q = fresh(H, cfg.n_q * d_h);
      w.w_k = fresh(H, cfg.n_k * d_h);
      w.w_c = fresh(H, cfg.n_c * cfg.latent_dim);
      const std::size_t per_group = n_h / cfg.n_c;
      for (std::size_t i = 0; i < n_h; ++i) {
        Matrix p = latent_selection(cfg.latent_dim, d_h, i % per_group);
        Matrix noise(cfg.latent_dim, d_h);
        fill(noise);
        w.w_p.push_back(add(p, noise));
        w.w_g.push_back(fresh(H, d_h));
        w.w_o.push_back(fresh(d_h, H));
      }
      break;
    }
    case Mechanism::mla: {
      const std::size_t d_nope = cfg.mla_d_nope;
      w.w_q = fresh(H, n_h * d_nope);
      w.w_dkv = fresh(H, cfg.mla_d_c);
      w.w_kr = fresh(H, cfg.mla_d_rope);
      for (std::size_t i = 0; i < n_h; ++i) {
        w.w_uk.push_back(fresh(cfg.mla_d_c, d_nope));
        w.w_uv.push_back(fresh(cfg.mla_d_c, d_nope));
        w.w_qr.push_back(fresh(H, cfg.mla_d_rope));
        w.w_o.push_back(fresh(d_nope, H));
      }
      break;
    }
  }
  return w;
}

}  // namespace gtalab
