// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gtalab/attention.hpp"

namespace gtalab {

struct QkcProjection {
  Matrix q;  // [N, n_q * head_dim], rotary applied
  Matrix k;  // [N, n_k * head_dim], rotary applied
  Matrix c;  // [N, n_c * latent_dim], no rotary: the latent carries no positions
};

inline QkcProjection project_qkc(const Matrix& x, const WeightSet& w,
                                 const AttentionConfig& cfg) {
  cfg.validate();
  if (cfg.mechanism != Mechanism::gta)
    throw std::invalid_argument("project_qkc: config is not gta");
  detail::check_input(x, cfg);
  const auto positions = iota_positions(x.rows);
  const RopeParams rp{cfg.head_dim, cfg.rope.theta_base};
  QkcProjection p;
  p.q = apply_rope_sliced(matmul(x, w.w_q), positions, rp);
  p.k = apply_rope_sliced(matmul(x, w.w_k), positions, rp);
  p.c = matmul(x, w.w_c);
  return p;
}

// Gated values for one head, one matrix per query row. Entry t is
//   (C_block * w_p[head]) .* act(x_query row t * w_g[head])
// with the gate row broadcast down the key axis. The ungated product is formed
// once and shared by every query row.
inline std::vector<Matrix> decode_values(const Matrix& c_latent, const Matrix& x_query,
                                         const WeightSet& w, const AttentionConfig& cfg,
                                         std::size_t head) {
  if (head >= cfg.n_heads)
    throw std::invalid_argument("decode_values: head out of range");
  const GroupingMap gm = GroupingMap::build(cfg);
  const Matrix block = col_block(c_latent, gm.c_of[head] * cfg.latent_dim, cfg.latent_dim);
  const Matrix ungated = matmul(block, w.w_p[head]);
  const Matrix gates = matmul(x_query, w.w_g[head]);  // [M, head_dim], pre-activation
  std::vector<Matrix> out;
  out.reserve(x_query.rows);
  for (std::size_t t = 0; t < x_query.rows; ++t)
    out.push_back(elementwise_gate(ungated, row_of(gates, t), cfg.gate_activation));
  return out;
}

// Direct path: each query row materializes its gated value matrix, then takes
// its attention-weighted sum. attention_maps in the trace holds the per-query-
// group maps for inspection.
inline ForwardTrace gta_forward_direct_trace(const Matrix& x, const WeightSet& w,
                                             const AttentionConfig& cfg) {
  cfg.validate();
  if (cfg.mechanism != Mechanism::gta)
    throw std::invalid_argument("gta_forward_direct: config is not gta");
  detail::check_input(x, cfg);
  const GroupingMap gm = GroupingMap::build(cfg);
  const QkcProjection proj = project_qkc(x, w, cfg);
  const std::size_t n = x.rows;

  ForwardTrace t;
  t.keys_rope = proj.k;
  t.latents = proj.c;
  t.attention_maps = detail::causal_attention_maps(
      proj.q, proj.k, cfg.n_q, cfg.head_dim,
      static_cast<double>(cfg.head_dim), gm.key_group_of);

  t.output = Matrix(n, cfg.hidden_dim);
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    const Matrix block = col_block(proj.c, gm.c_of[i] * cfg.latent_dim, cfg.latent_dim);
    const Matrix ungated = matmul(block, w.w_p[i]);       // [N, head_dim]
    const Matrix gates = matmul(x, w.w_g[i]);             // [N, head_dim]
    const Matrix& map = t.attention_maps[gm.q_of[i]];
    Matrix head_out(n, cfg.head_dim);
    for (std::size_t row = 0; row < n; ++row) {
      const Matrix v_row = elementwise_gate(ungated, row_of(gates, row),
                                            cfg.gate_activation);
      for (std::size_t j = 0; j < cfg.head_dim; ++j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n; ++s) acc += map(row, s) * v_row(s, j);
        head_out(row, j) = acc;
      }
    }
    accumulate(t.output, matmul(head_out, w.w_o[i]));
  }
  return t;
}

inline Matrix gta_forward_direct(const Matrix& x, const WeightSet& w,
                                 const AttentionConfig& cfg) {
  return gta_forward_direct_trace(x, w, cfg).output;
}

// Fused path: the attention map is applied to the shared latent first, so the
// gate multiplies a [N, latent_dim] product instead of per-row value copies.
// Algebraically identical to the direct path because the gate of query row t
// is constant down that row's key axis.
inline ForwardTrace gta_forward_fused_trace(const Matrix& x, const WeightSet& w,
                                            const AttentionConfig& cfg) {
  cfg.validate();
  if (cfg.mechanism != Mechanism::gta)
    throw std::invalid_argument("gta_forward_fused: config is not gta");
  detail::check_input(x, cfg);
  const GroupingMap gm = GroupingMap::build(cfg);
  const QkcProjection proj = project_qkc(x, w, cfg);

  ForwardTrace t;
  t.keys_rope = proj.k;
  t.latents = proj.c;
  t.attention_maps = detail::causal_attention_maps(
      proj.q, proj.k, cfg.n_q, cfg.head_dim,
      static_cast<double>(cfg.head_dim), gm.key_group_of);

  // map * latent block, shared by every head with the same (query, value)
  // group pair.
  std::vector<std::vector<Matrix>> mixed(cfg.n_q, std::vector<Matrix>(cfg.n_c));
  std::vector<std::vector<bool>> ready(cfg.n_q, std::vector<bool>(cfg.n_c, false));

  t.output = Matrix(x.rows, cfg.hidden_dim);
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    const std::size_t g = gm.q_of[i];
    const std::size_t c = gm.c_of[i];
    if (!ready[g][c]) {
      mixed[g][c] = matmul(t.attention_maps[g],
                           col_block(proj.c, c * cfg.latent_dim, cfg.latent_dim));
      ready[g][c] = true;
    }
    const Matrix z = matmul(mixed[g][c], w.w_p[i]);  // [N, head_dim]
    const Matrix gates = matmul(x, w.w_g[i]);
    const Matrix gated = elementwise_gate(z, gates, cfg.gate_activation);
    accumulate(t.output, matmul(gated, w.w_o[i]));
  }
  return t;
}

inline Matrix gta_forward_fused(const Matrix& x, const WeightSet& w,
                                const AttentionConfig& cfg) {
  return gta_forward_fused_trace(x, w, cfg).output;
}

}  // namespace gtalab
