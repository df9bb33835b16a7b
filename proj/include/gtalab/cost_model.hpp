// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "gtalab/config.hpp"

namespace gtalab {

enum class Phase { prefill, decode };

inline const char* to_string(Phase p) {
  return p == Phase::prefill ? "prefill" : "decode";
}

// Exact coefficient bookkeeping, not a hardware estimate. One unit is one
// multiply-accumulate of an (a x b) by (b x c) product, i.e. a*b*c units;
// softmax and rotary arithmetic are not charged. Prefill costs cover N tokens;
// decode costs cover one token generated against N tokens of history.
struct CostBreakdown {
  Phase phase = Phase::prefill;
  std::uint64_t linear_flops = 0;     // projections, decodes, output
  std::uint64_t attention_flops = 0;  // score and mix terms
  std::uint64_t cache_floats = 0;     // floats resident (prefill) or read (decode)
  bool per_token = false;             // true for decode
  std::uint64_t total() const { return linear_flops + attention_flops; }
};

// Floats cached per layer for N resident tokens.
inline std::uint64_t cache_formula(const AttentionConfig& cfg, std::uint64_t N) {
  const std::uint64_t d_h = cfg.head_dim;
  switch (cfg.mechanism) {
    case Mechanism::mha: return 2 * cfg.n_heads * d_h * N;
    case Mechanism::gqa: return 2 * cfg.n_k * d_h * N;
    case Mechanism::mla: return (cfg.mla_d_c + cfg.mla_d_rope) * N;
    case Mechanism::gva: return (cfg.hidden_dim + cfg.n_k * d_h) * N;
    case Mechanism::gha: return (cfg.n_k * d_h + cfg.n_c * d_h) * N;
    case Mechanism::gta: return (cfg.n_k * d_h + cfg.n_c * cfg.latent_dim) * N;
  }
  throw std::invalid_argument("cache_formula: bad mechanism");
}

inline CostBreakdown prefill_flops(const AttentionConfig& cfg, std::uint64_t N) {
  const std::uint64_t H = cfg.hidden_dim;
  const std::uint64_t d_h = cfg.head_dim;
  const std::uint64_t n_h = cfg.n_heads;
  CostBreakdown c;
  c.phase = Phase::prefill;
  c.cache_floats = cache_formula(cfg, N);
  switch (cfg.mechanism) {
    case Mechanism::mha:
      c.linear_flops = 4 * N * H * H;
      c.attention_flops = 2 * n_h * d_h * N * N;
      break;
    case Mechanism::gqa:
      c.linear_flops = 2 * N * H * H + 2 * cfg.n_k * d_h * N * H;
      c.attention_flops = 2 * n_h * d_h * N * N;
      break;
    case Mechanism::mla: {
      const std::uint64_t d_c = cfg.mla_d_c;
      const std::uint64_t d_r = cfg.mla_d_rope;
      const std::uint64_t d_n = cfg.mla_d_nope;
      c.linear_flops = (d_c + d_r) * N * H + n_h * (d_n + d_r) * N * H +
                       2 * n_h * d_c * d_n * N + N * H * H;
      c.attention_flops = n_h * (d_r + 2 * d_n) * N * N;
      break;
    }
    case Mechanism::gva:
      c.linear_flops = 2 * N * H * H + 2 * cfg.n_k * d_h * N * H;
      c.attention_flops = (cfg.n_q * d_h + n_h * d_h) * N * N;
      break;
    case Mechanism::gha:
      c.linear_flops = N * H * H + (cfg.n_q + cfg.n_k + cfg.n_c) * d_h * N * H;
      c.attention_flops = (cfg.n_q * d_h + n_h * d_h) * N * N;
      break;
    case Mechanism::gta: {
      const std::uint64_t d_l = cfg.latent_dim;
      c.linear_flops = 2 * N * H * H +
                       (cfg.n_q * d_h + cfg.n_k * d_h + cfg.n_c * d_l + d_l) * N * H;
      c.attention_flops = cfg.n_q * (d_h + d_l) * N * N;
      break;
    }
  }
  return c;
}

inline CostBreakdown decode_flops(const AttentionConfig& cfg, std::uint64_t N) {
  const std::uint64_t H = cfg.hidden_dim;
  const std::uint64_t d_h = cfg.head_dim;
  const std::uint64_t n_h = cfg.n_heads;
  CostBreakdown c;
  c.phase = Phase::decode;
  c.per_token = true;
  c.cache_floats = cache_formula(cfg, N);
  switch (cfg.mechanism) {
    case Mechanism::mha:
      c.linear_flops = 4 * H * H;
      c.attention_flops = 2 * n_h * d_h * N;
      break;
    case Mechanism::gqa:
      c.linear_flops = 2 * H * H + 2 * cfg.n_k * d_h * H;
      c.attention_flops = 2 * n_h * d_h * N;
      break;
    case Mechanism::mla: {
      const std::uint64_t d_c = cfg.mla_d_c;
      const std::uint64_t d_r = cfg.mla_d_rope;
      const std::uint64_t d_n = cfg.mla_d_nope;
      // The per-step decompression of the cached latent keeps a history term
      // inside the otherwise-flat linear cost.
      c.linear_flops = (d_c + d_r) * H + n_h * (d_n + d_r) * H +
                       2 * n_h * d_c * d_n * N + H * H;
      c.attention_flops = n_h * (d_r + 2 * d_n) * N;
      break;
    }
    case Mechanism::gva:
      c.linear_flops = 2 * H * H + 2 * cfg.n_k * d_h * H;
      c.attention_flops = (cfg.n_q * d_h + n_h * d_h) * N;
      break;
    case Mechanism::gha:
      c.linear_flops = H * H + (cfg.n_q + cfg.n_k + cfg.n_c) * d_h * H;
      c.attention_flops = (cfg.n_q * d_h + n_h * d_h) * N;
      break;
    case Mechanism::gta: {
      const std::uint64_t d_l = cfg.latent_dim;
      c.linear_flops =
          2 * H * H + (cfg.n_q * d_h + cfg.n_k * d_h + cfg.n_c * d_l + d_l) * H;
      c.attention_flops = 2 * n_h * d_h * N;
      break;
    }
  }
  return c;
}

// A named model scale: attention config plus everything the whole-model cost
// needs (depth, MLP width, vocabulary).
struct ModelPreset {
  std::string name;
  std::size_t layers = 0;
  std::size_t intermediate = 0;  // MLP inner width
  std::size_t vocab = 0;
  AttentionConfig attention;
};

// Whole-model flops for one forward pass at batch 1, split by source. The MLP
// is three hidden x intermediate matrices (gated unit) at 2 flops per
// multiply-add; the final vocabulary projection is charged for every processed
// token. These two use the usual 2*m*n*k flop convention; the attention terms
// keep the per-layer accounting above so they stay comparable across
// mechanisms.
struct ModelCost {
  Phase phase = Phase::prefill;
  std::uint64_t attn_linear = 0;     // layers * per-layer linear
  std::uint64_t attn_attention = 0;  // layers * per-layer attention
  std::uint64_t mlp = 0;             // layers * 2 * tokens * H * intermediate * 3
  std::uint64_t head = 0;            // 2 * tokens * H * vocab
  std::uint64_t total() const { return attn_linear + attn_attention + mlp + head; }
};

inline ModelCost full_model_cost(const ModelPreset& p, std::uint64_t N,
                                 std::uint64_t batch, Phase phase) {
  if (p.layers == 0 || p.intermediate == 0 || p.vocab == 0)
    throw std::invalid_argument("full_model_cost: incomplete preset " + p.name);
  if (batch == 0) throw std::invalid_argument("full_model_cost: batch must be positive");
  const CostBreakdown layer = phase == Phase::prefill ? prefill_flops(p.attention, N)
                                                      : decode_flops(p.attention, N);
  const std::uint64_t tokens = phase == Phase::prefill ? N : 1;
  const std::uint64_t H = p.attention.hidden_dim;
  ModelCost c;
  c.phase = phase;
  c.attn_linear = batch * p.layers * layer.linear_flops;
  c.attn_attention = batch * p.layers * layer.attention_flops;
  c.mlp = batch * p.layers * 2 * tokens * H * p.intermediate * 3;
  c.head = batch * 2 * tokens * H * p.vocab;
  return c;
}

// Parameter count actually instantiated by the mechanism's weight shapes.
// Used by the latency model for weight traffic.
inline std::uint64_t attention_param_count(const AttentionConfig& cfg) {
  const std::uint64_t H = cfg.hidden_dim;
  const std::uint64_t d_h = cfg.head_dim;
  const std::uint64_t n_h = cfg.n_heads;
  switch (cfg.mechanism) {
    case Mechanism::mha:
      return H * n_h * d_h * 3 + n_h * d_h * H;
    case Mechanism::gqa:
      return H * n_h * d_h + 2 * H * cfg.n_k * d_h + n_h * d_h * H;
    case Mechanism::gva:
      return H * cfg.n_q * d_h + H * cfg.n_k * d_h + H * n_h * d_h + n_h * d_h * H;
    case Mechanism::gha:
      return H * (cfg.n_q + cfg.n_k + cfg.n_c) * d_h + n_h * d_h * d_h +
             n_h * d_h * H;
    case Mechanism::gta:
      return H * cfg.n_q * d_h + H * cfg.n_k * d_h + H * cfg.n_c * cfg.latent_dim +
             n_h * cfg.latent_dim * d_h + n_h * H * d_h + n_h * d_h * H;
    case Mechanism::mla:
      return H * cfg.mla_d_c + H * cfg.mla_d_rope +
             n_h * (2 * cfg.mla_d_c * cfg.mla_d_nope + H * cfg.mla_d_nope +
                    H * cfg.mla_d_rope + cfg.mla_d_nope * H);
  }
  throw std::invalid_argument("attention_param_count: bad mechanism");
}

// Parameters streamed per forward pass: every layer's attention and MLP
// weights plus the vocabulary head. The input embedding is a row lookup, not a
// streamed matrix, so it is not charged.
inline std::uint64_t streamed_param_count(const ModelPreset& p) {
  const std::uint64_t H = p.attention.hidden_dim;
  return p.layers * (attention_param_count(p.attention) + 3 * H * p.intermediate) +
         static_cast<std::uint64_t>(p.vocab) * H;
}

}  // namespace gtalab
