// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gtalab/gta.hpp"

namespace gtalab {

// Gradients of the gta forward pass with respect to the input and every
// matrix the mechanism reads. Parameters other mechanisms would own (w_v,
// the mla set) do not exist here, which is itself asserted by tests.
struct GtaGradients {
  Matrix d_x;
  Matrix d_w_q, d_w_k, d_w_c;
  std::vector<Matrix> d_w_p, d_w_g, d_w_o;
};

// Reverse-mode gradients for gta, derived against the fused form
//   O = sum_i ((A_{q(i)} C_{c(i)} w_p[i]) .* act(X w_g[i])) w_o[i]
// which the direct path equals exactly. Softmax and rotary steps are inverted
// row by row; the rotary adjoint is the opposite rotation.
inline GtaGradients gta_backward(const Matrix& x, const WeightSet& w,
                                 const AttentionConfig& cfg, const Matrix& upstream) {
  cfg.validate();
  if (cfg.mechanism != Mechanism::gta)
    throw std::invalid_argument("gta_backward: config is not gta");
  detail::check_input(x, cfg);
  if (upstream.rows != x.rows || upstream.cols != cfg.hidden_dim)
    throw std::invalid_argument("gta_backward: upstream " + shape_str(upstream) +
                                " vs output " + std::to_string(x.rows) + "x" +
                                std::to_string(cfg.hidden_dim));

  const GroupingMap gm = GroupingMap::build(cfg);
  const std::size_t n = x.rows;
  const std::size_t d_h = cfg.head_dim;
  const std::size_t d_l = cfg.latent_dim;
  const double scale = std::sqrt(static_cast<double>(d_h));
  const auto positions = iota_positions(n);
  const RopeParams rp{d_h, cfg.rope.theta_base};

  // Recompute forward intermediates.
  const Matrix q_raw = matmul(x, w.w_q);
  const Matrix k_raw = matmul(x, w.w_k);
  const Matrix q_rope = apply_rope_sliced(q_raw, positions, rp);
  const Matrix k_rope = apply_rope_sliced(k_raw, positions, rp);
  const Matrix c_all = matmul(x, w.w_c);
  const std::vector<Matrix> maps = detail::causal_attention_maps(
      q_rope, k_rope, cfg.n_q, d_h, static_cast<double>(d_h), gm.key_group_of);

  GtaGradients g;
  g.d_x = Matrix(n, cfg.hidden_dim);
  g.d_w_q = Matrix(w.w_q.rows, w.w_q.cols);
  g.d_w_k = Matrix(w.w_k.rows, w.w_k.cols);
  g.d_w_c = Matrix(w.w_c.rows, w.w_c.cols);
  std::vector<Matrix> d_maps(cfg.n_q, Matrix(n, n));
  Matrix d_c_all(n, c_all.cols);

  const Matrix xt = transpose(x);
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    const std::size_t a = gm.q_of[i];
    const std::size_t c = gm.c_of[i];
    const Matrix c_block = col_block(c_all, c * d_l, d_l);
    const Matrix p_i = matmul(c_block, w.w_p[i]);   // [N, d_h]
    const Matrix z_i = matmul(maps[a], p_i);        // [N, d_h]
    const Matrix e_i = matmul(x, w.w_g[i]);         // [N, d_h]
    Matrix gate(n, d_h), dgate(n, d_h);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d_h; ++j) {
        gate(r, j) = activate(cfg.gate_activation, e_i(r, j));
        dgate(r, j) = activate_grad(cfg.gate_activation, e_i(r, j));
      }
    const Matrix y_i = hadamard(z_i, gate);

    g.d_w_o.push_back(matmul(transpose(y_i), upstream));
    const Matrix d_y = matmul(upstream, transpose(w.w_o[i]));
    const Matrix d_z = hadamard(d_y, gate);
    const Matrix d_e = hadamard(hadamard(d_y, z_i), dgate);

    g.d_w_g.push_back(matmul(xt, d_e));
    accumulate(g.d_x, matmul(d_e, transpose(w.w_g[i])));

    accumulate(d_maps[a], matmul(d_z, transpose(p_i)));
    const Matrix d_p = matmul(transpose(maps[a]), d_z);
    g.d_w_p.push_back(matmul(transpose(c_block), d_p));

    const Matrix d_block = matmul(d_p, transpose(w.w_p[i]));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d_l; ++j) d_c_all(r, c * d_l + j) += d_block(r, j);
  }

  // Softmax rows, then the scaled score product, per query group.
  Matrix d_q_rope(n, q_rope.cols);
  Matrix d_k_rope(n, k_rope.cols);
  for (std::size_t a = 0; a < cfg.n_q; ++a) {
    const Matrix& map = maps[a];
    Matrix d_scores(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t s = 0; s < n; ++s) dot += d_maps[a](r, s) * map(r, s);
      for (std::size_t s = 0; s < n; ++s)
        d_scores(r, s) = (d_maps[a](r, s) - dot) * map(r, s) / scale;
    }
    const std::size_t b = gm.key_group_of[a];
    const Matrix q_block = col_block(q_rope, a * d_h, d_h);
    const Matrix k_block = col_block(k_rope, b * d_h, d_h);
    const Matrix d_q_block = matmul(d_scores, k_block);
    const Matrix d_k_block = matmul(transpose(d_scores), q_block);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d_h; ++j) {
        d_q_rope(r, a * d_h + j) += d_q_block(r, j);
        d_k_rope(r, b * d_h + j) += d_k_block(r, j);
      }
  }

  const Matrix d_q_raw = apply_rope_sliced(d_q_rope, positions, rp, /*inverse=*/true);
  const Matrix d_k_raw = apply_rope_sliced(d_k_rope, positions, rp, /*inverse=*/true);

  g.d_w_q = matmul(xt, d_q_raw);
  g.d_w_k = matmul(xt, d_k_raw);
  g.d_w_c = matmul(xt, d_c_all);
  accumulate(g.d_x, matmul(d_q_raw, transpose(w.w_q)));
  accumulate(g.d_x, matmul(d_k_raw, transpose(w.w_k)));
  accumulate(g.d_x, matmul(d_c_all, transpose(w.w_c)));
  return g;
}

}  // namespace gtalab
