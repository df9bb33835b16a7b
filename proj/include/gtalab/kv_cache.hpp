// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gtalab/forward.hpp"

namespace gtalab {

struct CacheOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-sequence decoding state. Rows [0, length) of each member are live; the
// rest is preallocated up to the configured capacity. What is stored per token
// is exactly what the mechanism's cost formula charges for:
//   mha  keys + values, one pair per head
//   gqa  keys + values, one pair per KV group
//   gva  keys per group + values per head
//   gha  keys per group + shared value sources
//   gta  keys per group + shared latent blocks
//   mla  joint latent + rotary key slice
// Keys (and the mla rotary slice) are stored with rotary already applied.
struct KVCacheState {
  Mechanism mechanism = Mechanism::mha;
  std::size_t length = 0;
  std::size_t capacity = 0;
  Matrix keys;     // [capacity, n_k * head_dim]
  Matrix values;   // mha/gva: [., n_h * head_dim]; gqa: [., n_k * head_dim];
                   // gha: [., n_c * head_dim]
  Matrix latents;  // gta: [capacity, n_c * latent_dim]
  Matrix ckv;      // mla: [capacity, mla_d_c]
  Matrix krope;    // mla: [capacity, mla_d_rope]
};

struct PrefillResult {
  Matrix outputs;  // [N, hidden_dim], identical to the plain forward pass
  KVCacheState cache;
};

struct DecodeStepResult {
  Matrix output;  // [1, hidden_dim]
};

inline KVCacheState make_cache(const AttentionConfig& cfg) {
  cfg.validate();
  KVCacheState s;
  s.mechanism = cfg.mechanism;
  s.capacity = cfg.max_seq_len;
  switch (cfg.mechanism) {
    case Mechanism::mha:
    case Mechanism::gva:
      s.keys = Matrix(s.capacity, cfg.n_k * cfg.head_dim);
      s.values = Matrix(s.capacity, cfg.n_heads * cfg.head_dim);
      break;
    case Mechanism::gqa:
      s.keys = Matrix(s.capacity, cfg.n_k * cfg.head_dim);
      s.values = Matrix(s.capacity, cfg.n_k * cfg.head_dim);
      break;
    case Mechanism::gha:
      s.keys = Matrix(s.capacity, cfg.n_k * cfg.head_dim);
      s.values = Matrix(s.capacity, cfg.n_c * cfg.head_dim);
      break;
    case Mechanism::gta:
      s.keys = Matrix(s.capacity, cfg.n_k * cfg.head_dim);
      s.latents = Matrix(s.capacity, cfg.n_c * cfg.latent_dim);
      break;
    case Mechanism::mla:
      s.ckv = Matrix(s.capacity, cfg.mla_d_c);
      s.krope = Matrix(s.capacity, cfg.mla_d_rope);
      break;
  }
  return s;
}

// Bytes held by the live rows, at 8 bytes per double. By construction this is
// the mechanism's cached-floats formula times 8.
inline std::size_t cache_bytes(const KVCacheState& s) {
  const std::size_t floats =
      s.length * (s.keys.cols + s.values.cols + s.latents.cols + s.ckv.cols + s.krope.cols);
  return floats * sizeof(double);
}

namespace detail {

inline void append_rows(KVCacheState& s, const ForwardTrace& t, std::size_t count) {
  auto paste = [&s, count](Matrix& dst, const Matrix& src) {
    if (dst.cols == 0) return;
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t c = 0; c < dst.cols; ++c) dst(s.length + r, c) = src(r, c);
  };
  paste(s.keys, t.keys_rope);
  paste(s.values, t.values);
  paste(s.latents, t.latents);
  paste(s.ckv, t.ckv);
  paste(s.krope, t.krope);
  s.length += count;
}

}  // namespace detail

inline PrefillResult prefill(const Matrix& x, const WeightSet& w,
                             const AttentionConfig& cfg) {
  PrefillResult r;
  r.cache = make_cache(cfg);
  if (x.rows > r.cache.capacity)
    throw CacheOverflowError("prefill: " + std::to_string(x.rows) +
                             " tokens exceed capacity " +
                             std::to_string(r.cache.capacity));
  ForwardTrace t = forward_trace(x, w, cfg);
  detail::append_rows(r.cache, t, x.rows);
  r.outputs = std::move(t.output);
  return r;
}

// One generation step: project the new token, append its cached rows, then
// attend from the single query over everything now resident (history plus
// itself). The cache is updated in place; a cache has exactly one writer.
inline DecodeStepResult decode_step(const Matrix& x_t, KVCacheState& cache,
                                    const WeightSet& w, const AttentionConfig& cfg) {
  cfg.validate();
  if (cache.mechanism != cfg.mechanism)
    throw std::invalid_argument("decode_step: cache/config mechanism mismatch");
  if (x_t.rows != 1 || x_t.cols != cfg.hidden_dim)
    throw std::invalid_argument("decode_step: expected [1, hidden_dim], got " +
                                shape_str(x_t));
  if (cache.length >= cache.capacity)
    throw CacheOverflowError("decode_step: cache full at capacity " +
                             std::to_string(cache.capacity));

  const GroupingMap gm = GroupingMap::build(cfg);
  const std::size_t pos = cache.length;
  const std::vector<std::size_t> position{pos};
  const std::size_t d_h = cfg.head_dim;
  const double scale = std::sqrt(static_cast<double>(d_h));

  DecodeStepResult res;
  res.output = Matrix(1, cfg.hidden_dim);

  if (cfg.mechanism == Mechanism::mla) {
    const std::size_t d_nope = cfg.mla_d_nope;
    const std::size_t d_rope = cfg.mla_d_rope;
    ForwardTrace rows;
    rows.ckv = matmul(x_t, w.w_dkv);
    rows.krope = d_rope ? apply_rope(matmul(x_t, w.w_kr), position,
                                     RopeParams{d_rope, cfg.rope.theta_base})
                        : Matrix(1, 0);
    detail::append_rows(cache, rows, 1);
    const std::size_t len = cache.length;

    Matrix ckv_live(len, cfg.mla_d_c), krope_live(len, d_rope);
    for (std::size_t r = 0; r < len; ++r) {
      for (std::size_t c = 0; c < cfg.mla_d_c; ++c) ckv_live(r, c) = cache.ckv(r, c);
      for (std::size_t c = 0; c < d_rope; ++c) krope_live(r, c) = cache.krope(r, c);
    }
    const Matrix q_nope = matmul(x_t, w.w_q);
    for (std::size_t i = 0; i < cfg.n_heads; ++i) {
      Matrix q_i = col_block(q_nope, i * d_nope, d_nope);
      Matrix k_i = matmul(ckv_live, w.w_uk[i]);
      if (d_rope) {
        q_i = hcat(q_i, apply_rope(matmul(x_t, w.w_qr[i]), position,
                                   RopeParams{d_rope, cfg.rope.theta_base}));
        k_i = hcat(k_i, krope_live);
      }
      const Matrix att = row_softmax(matmul(q_i, transpose(k_i)),
                                     std::sqrt(static_cast<double>(d_nope + d_rope)));
      const Matrix v_i = matmul(ckv_live, w.w_uv[i]);
      accumulate(res.output, matmul(matmul(att, v_i), w.w_o[i]));
    }
    return res;
  }

  const RopeParams rp{d_h, cfg.rope.theta_base};
  ForwardTrace rows;
  rows.keys_rope = apply_rope_sliced(matmul(x_t, w.w_k), position, rp);
  if (cfg.mechanism == Mechanism::gta)
    rows.latents = matmul(x_t, w.w_c);
  else
    rows.values = matmul(x_t, w.w_v);
  detail::append_rows(cache, rows, 1);
  const std::size_t len = cache.length;

  const Matrix q_rope = apply_rope_sliced(matmul(x_t, w.w_q), position, rp);

  // One attention row per query group over the live keys.
  std::vector<Matrix> att(cfg.n_q);
  for (std::size_t g = 0; g < cfg.n_q; ++g) {
    const std::size_t b = gm.key_group_of[g];
    Matrix scores(1, len);
    for (std::size_t s = 0; s < len; ++s) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d_h; ++j)
        acc += q_rope(0, g * d_h + j) * cache.keys(s, b * d_h + j);
      scores(0, s) = acc;
    }
    att[g] = row_softmax(scores, scale);
  }

  if (cfg.mechanism == Mechanism::gta) {
    const std::size_t d_l = cfg.latent_dim;
    // att row folded into each live latent block once per (query, value) pair.
    std::vector<std::vector<Matrix>> mixed(cfg.n_q, std::vector<Matrix>(cfg.n_c));
    std::vector<std::vector<bool>> ready(cfg.n_q, std::vector<bool>(cfg.n_c, false));
    for (std::size_t i = 0; i < cfg.n_heads; ++i) {
      const std::size_t g = gm.q_of[i];
      const std::size_t c = gm.c_of[i];
      if (!ready[g][c]) {
        Matrix m(1, d_l);
        for (std::size_t s = 0; s < len; ++s)
          for (std::size_t j = 0; j < d_l; ++j)
            m(0, j) += att[g](0, s) * cache.latents(s, c * d_l + j);
        mixed[g][c] = std::move(m);
        ready[g][c] = true;
      }
      const Matrix z = matmul(mixed[g][c], w.w_p[i]);
      const Matrix gate = matmul(x_t, w.w_g[i]);
      accumulate(res.output,
                 matmul(elementwise_gate(z, gate, cfg.gate_activation), w.w_o[i]));
    }
    return res;
  }

  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    const std::size_t g = gm.q_of[i];
    const std::size_t c0 = (cfg.mechanism == Mechanism::mha || cfg.mechanism == Mechanism::gva)
                               ? i * d_h
                               : gm.c_of[i] * d_h;
    Matrix v_mix(1, d_h);
    for (std::size_t s = 0; s < len; ++s)
      for (std::size_t j = 0; j < d_h; ++j)
        v_mix(0, j) += att[g](0, s) * cache.values(s, c0 + j);
    if (cfg.mechanism == Mechanism::gha) v_mix = matmul(v_mix, w.w_p[i]);
    accumulate(res.output, matmul(v_mix, w.w_o[i]));
  }
  return res;
}

}  // namespace gtalab
