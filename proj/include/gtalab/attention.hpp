// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gtalab/config.hpp"
#include "gtalab/matrix.hpp"
#include "gtalab/rope.hpp"
#include "gtalab/weights.hpp"

namespace gtalab {

// Output of one full-sequence forward pass, plus the per-token state a KV
// cache would retain. Unused members stay empty for a given mechanism.
struct ForwardTrace {
  Matrix output;     // [N, hidden_dim]
  Matrix keys_rope;  // [N, n_k * head_dim], rotary already applied
  Matrix values;     // raw value projection rows (mha/gqa/gva/gha)
  Matrix latents;    // gta: [N, n_c * latent_dim]
  Matrix ckv;        // mla: [N, mla_d_c]
  Matrix krope;      // mla: [N, mla_d_rope], rotary already applied
  std::vector<Matrix> attention_maps;  // one [N, N] map per query group
};

namespace detail {

inline void check_input(const Matrix& x, const AttentionConfig& cfg) {
  if (x.cols != cfg.hidden_dim)
    throw std::invalid_argument("forward: input " + shape_str(x) + " vs hidden_dim " +
                                std::to_string(cfg.hidden_dim));
  if (x.rows == 0) throw std::invalid_argument("forward: empty input");
}

// Causal attention maps, one per query group. Query group g attends with key
// group key_group_of[g]; scores are masked with -inf above the diagonal and
// softmaxed at scale sqrt(score_dim).
inline std::vector<Matrix> causal_attention_maps(const Matrix& q_rope, const Matrix& k_rope,
                                                 std::size_t n_q, std::size_t width,
                                                 double score_dim,
                                                 const std::vector<std::size_t>& key_group_of) {
  const std::size_t n = q_rope.rows;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> maps;
  maps.reserve(n_q);
  for (std::size_t g = 0; g < n_q; ++g) {
    const Matrix qg = col_block(q_rope, g * width, width);
    const Matrix kg = col_block(k_rope, key_group_of[g] * width, width);
    Matrix scores = matmul(qg, transpose(kg));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r + 1; c < n; ++c) scores(r, c) = neg_inf;
    maps.push_back(row_softmax(scores, std::sqrt(score_dim)));
  }
  return maps;
}

}  // namespace detail

// Forward pass for the mechanisms whose per-head values are a plain linear
// function of the sequence: mha, gqa, gva and gha. They differ only in how a
// head finds its value columns and, for gha, in the per-head decode of the
// shared source. Heads are summed in ascending order.
inline ForwardTrace grouped_forward_trace(const Matrix& x, const WeightSet& w,
                                          const AttentionConfig& cfg) {
  cfg.validate();
  detail::check_input(x, cfg);
  const GroupingMap gm = GroupingMap::build(cfg);
  const auto positions = iota_positions(x.rows);
  const RopeParams rp{cfg.head_dim, cfg.rope.theta_base};

  ForwardTrace t;
  const Matrix q_rope = apply_rope_sliced(matmul(x, w.w_q), positions, rp);
  t.keys_rope = apply_rope_sliced(matmul(x, w.w_k), positions, rp);
  t.values = matmul(x, w.w_v);
  t.attention_maps = detail::causal_attention_maps(
      q_rope, t.keys_rope, cfg.n_q, cfg.head_dim,
      static_cast<double>(cfg.head_dim), gm.key_group_of);

  t.output = Matrix(x.rows, cfg.hidden_dim);
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    Matrix v_i;
    switch (cfg.mechanism) {
      case Mechanism::mha:
      case Mechanism::gva:
        v_i = col_block(t.values, i * cfg.head_dim, cfg.head_dim);
        break;
      case Mechanism::gqa:
        v_i = col_block(t.values, gm.c_of[i] * cfg.head_dim, cfg.head_dim);
        break;
      case Mechanism::gha:
        v_i = matmul(col_block(t.values, gm.c_of[i] * cfg.head_dim, cfg.head_dim),
                     w.w_p[i]);
        break;
      default:
        throw std::invalid_argument("grouped_forward_trace: unsupported mechanism");
    }
    accumulate(t.output, matmul(matmul(t.attention_maps[gm.q_of[i]], v_i), w.w_o[i]));
  }
  return t;
}

inline Matrix mha_forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  if (cfg.mechanism != Mechanism::mha)
    throw std::invalid_argument("mha_forward: config is not mha");
  return grouped_forward_trace(x, w, cfg).output;
}

inline Matrix gqa_forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  if (cfg.mechanism != Mechanism::gqa)
    throw std::invalid_argument("gqa_forward: config is not gqa");
  return grouped_forward_trace(x, w, cfg).output;
}

inline Matrix gva_forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  if (cfg.mechanism != Mechanism::gva)
    throw std::invalid_argument("gva_forward: config is not gva");
  return grouped_forward_trace(x, w, cfg).output;
}

inline Matrix gha_forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  if (cfg.mechanism != Mechanism::gha)
    throw std::invalid_argument("gha_forward: config is not gha");
  return grouped_forward_trace(x, w, cfg).output;
}

}  // namespace gtalab
