// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include "gtalab/attention.hpp"

namespace gtalab {

// Low-rank latent attention. Keys and values for every head are decoded from
// one shared [N, mla_d_c] latent; positions enter only through a decoupled
// rotary key slice shared by all heads. With mla_d_rope == 0 the mechanism is
// plain low-rank attention with no positional term.
inline ForwardTrace mla_forward_trace(const Matrix& x, const WeightSet& w,
                                      const AttentionConfig& cfg) {
  cfg.validate();
  if (cfg.mechanism != Mechanism::mla)
    throw std::invalid_argument("mla_forward: config is not mla");
  detail::check_input(x, cfg);
  const std::size_t n = x.rows;
  const std::size_t d_nope = cfg.mla_d_nope;
  const std::size_t d_rope = cfg.mla_d_rope;
  const auto positions = iota_positions(n);
  const double neg_inf = -std::numeric_limits<double>::infinity();

  ForwardTrace t;
  t.ckv = matmul(x, w.w_dkv);  // [N, mla_d_c]
  t.krope = d_rope ? apply_rope(matmul(x, w.w_kr), positions,
                                RopeParams{d_rope, cfg.rope.theta_base})
                   : Matrix(n, 0);

  const Matrix q_nope = matmul(x, w.w_q);  // [N, n_h * d_nope]
  t.output = Matrix(n, cfg.hidden_dim);
  t.attention_maps.reserve(cfg.n_heads);
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    Matrix q_i = col_block(q_nope, i * d_nope, d_nope);
    Matrix k_i = matmul(t.ckv, w.w_uk[i]);
    if (d_rope) {
      q_i = hcat(q_i, apply_rope(matmul(x, w.w_qr[i]), positions,
                                 RopeParams{d_rope, cfg.rope.theta_base}));
      k_i = hcat(k_i, t.krope);
    }
    Matrix scores = matmul(q_i, transpose(k_i));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r + 1; c < n; ++c) scores(r, c) = neg_inf;
    Matrix map = row_softmax(scores, std::sqrt(static_cast<double>(d_nope + d_rope)));
    const Matrix v_i = matmul(t.ckv, w.w_uv[i]);  // [N, d_nope]
    accumulate(t.output, matmul(matmul(map, v_i), w.w_o[i]));
    t.attention_maps.push_back(std::move(map));
  }
  return t;
}

inline Matrix mla_forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  return mla_forward_trace(x, w, cfg).output;
}

}  // namespace gtalab
