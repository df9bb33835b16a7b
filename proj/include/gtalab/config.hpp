// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtalab/matrix.hpp"
#include "gtalab/rope.hpp"

namespace gtalab {

// The attention family covered by this lab.
//   mha  - one query/key/value set per head
//   gqa  - full queries, keys and values shared across head groups
//   mla  - low-rank joint KV latent plus a decoupled rotary key
//   gva  - grouped attention maps, per-head values
//   gha  - grouped attention maps, per-head values decoded from shared sources
//   gta  - grouped attention maps, per-head values decoded from a wide latent
//          with a nonlinear gate from the current hidden state
enum class Mechanism { mha, gqa, mla, gva, gha, gta };

inline const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::mha: return "mha";
    case Mechanism::gqa: return "gqa";
    case Mechanism::mla: return "mla";
    case Mechanism::gva: return "gva";
    case Mechanism::gha: return "gha";
    case Mechanism::gta: return "gta";
  }
  return "?";
}

inline Mechanism parse_mechanism(const std::string& s) {
  if (s == "mha") return Mechanism::mha;
  if (s == "gqa") return Mechanism::gqa;
  if (s == "mla") return Mechanism::mla;
  if (s == "gva") return Mechanism::gva;
  if (s == "gha") return Mechanism::gha;
  if (s == "gta") return Mechanism::gta;
  throw std::invalid_argument("unknown mechanism: " + s);
}

// How head index i picks its query/key/value group.
enum class GroupingRule { contiguous, modulo };

struct AttentionConfig {
  Mechanism mechanism = Mechanism::mha;
  std::size_t hidden_dim = 0;  // H
  std::size_t n_heads = 0;     // n_h
  std::size_t n_q = 0;         // query groups
  std::size_t n_k = 0;         // key groups
  std::size_t n_c = 0;         // value groups (value sources / latent blocks)
  std::size_t head_dim = 0;    // d_h
  std::size_t latent_dim = 0;  // d_l, decode-source width per value group (gta/gha)
  std::size_t mla_d_c = 0;     // joint KV latent width
  std::size_t mla_d_rope = 0;  // rotary key width (may be 0)
  std::size_t mla_d_nope = 0;  // content key/value width per head
  ActivationKind gate_activation = ActivationKind::sigmoid;
  RopeParams rope;
  GroupingRule grouping = GroupingRule::contiguous;
  std::size_t max_seq_len = 256;  // cache capacity used by prefill/decode

  void validate() const;
};

inline void AttentionConfig::validate() const {
  auto fail = [this](const std::string& msg) {
    throw std::invalid_argument(std::string(to_string(mechanism)) + " config: " + msg);
  };
  if (hidden_dim == 0 || n_heads == 0 || head_dim == 0)
    fail("hidden_dim, n_heads and head_dim must be positive");
  if (n_q == 0 || n_k == 0 || n_c == 0) fail("group counts must be positive");
  if (n_heads % n_q != 0 || n_heads % n_k != 0 || n_heads % n_c != 0)
    fail("n_heads must be divisible by each group count");
  if (max_seq_len == 0) fail("max_seq_len must be positive");

  const bool full_width = n_heads * head_dim == hidden_dim;
  switch (mechanism) {
    case Mechanism::mha:
      if (n_q != n_heads || n_k != n_heads || n_c != n_heads)
        fail("expects one group per head");
      if (!full_width) fail("n_heads * head_dim must equal hidden_dim");
      break;
    case Mechanism::gqa:
      if (n_q != n_heads) fail("expects per-head queries (n_q == n_heads)");
      if (n_c != n_k) fail("keys and values share groups (n_c == n_k)");
      if (!full_width) fail("n_heads * head_dim must equal hidden_dim");
      break;
    case Mechanism::gva:
      if (n_q != n_k) fail("queries and keys share one grouping (n_q == n_k)");
      if (n_c != n_heads) fail("expects per-head values (n_c == n_heads)");
      if (!full_width) fail("n_heads * head_dim must equal hidden_dim");
      break;
    case Mechanism::gha:
      if (n_q % n_k != 0) fail("key groups must refine query groups (n_k | n_q)");
      if (latent_dim != head_dim) fail("value sources are head_dim wide");
      if (!full_width) fail("n_heads * head_dim must equal hidden_dim");
      break;
    case Mechanism::gta:
      if (n_q % n_k != 0) fail("key groups must refine query groups (n_k | n_q)");
      if (latent_dim < head_dim) fail("latent_dim must be at least head_dim");
      break;
    case Mechanism::mla:
      if (mla_d_c == 0) fail("mla_d_c must be positive");
      if (mla_d_nope == 0) fail("mla_d_nope must be positive");
      if (mla_d_rope % 2 != 0) fail("mla_d_rope must be even");
      if (mla_d_nope + mla_d_rope != head_dim)
        fail("mla_d_nope + mla_d_rope must equal head_dim");
      if (n_q != n_heads || n_k != 1 || n_c != 1)
        fail("expects n_q == n_heads and n_k == n_c == 1");
      break;
  }

  if (mechanism == Mechanism::mla) {
    if (mla_d_rope > 0 && rope.head_dim != mla_d_rope)
      fail("rope.head_dim must equal mla_d_rope");
    if (mla_d_rope > 0) rope.validate();
  } else {
    if (rope.head_dim != head_dim) fail("rope.head_dim must equal head_dim");
    rope.validate();
  }
}

// Head -> group assignments, precomputed as plain index tables. With the
// contiguous rule head i belongs to query group i / (n_h / n_q); with the
// modulo rule it belongs to i % n_q (likewise for keys and values). gqa always
// uses the modulo rule on its shared KV groups.
struct GroupingMap {
  std::vector<std::size_t> q_of, k_of, c_of;
  std::vector<std::size_t> key_group_of;  // query group -> key group

  static GroupingMap build(const AttentionConfig& cfg) {
    GroupingMap gm;
    const std::size_t n_h = cfg.n_heads;
    gm.q_of.resize(n_h);
    gm.k_of.resize(n_h);
    gm.c_of.resize(n_h);
    const bool modulo = cfg.grouping == GroupingRule::modulo ||
                        cfg.mechanism == Mechanism::gqa;
    for (std::size_t i = 0; i < n_h; ++i) {
      if (modulo) {
        gm.q_of[i] = i % cfg.n_q;
        gm.k_of[i] = i % cfg.n_k;
        gm.c_of[i] = i % cfg.n_c;
      } else {
        gm.q_of[i] = i / (n_h / cfg.n_q);
        gm.k_of[i] = i / (n_h / cfg.n_k);
        gm.c_of[i] = i / (n_h / cfg.n_c);
      }
    }
    // Every head in a query group must agree on its key group, otherwise a
    // shared attention map is ill-defined. Config validation guarantees this;
    // the check here catches hand-built maps.
    gm.key_group_of.assign(cfg.n_q, 0);
    std::vector<bool> seen(cfg.n_q, false);
    for (std::size_t i = 0; i < n_h; ++i) {
      const std::size_t g = gm.q_of[i];
      if (!seen[g]) {
        gm.key_group_of[g] = gm.k_of[i];
        seen[g] = true;
      } else if (gm.key_group_of[g] != gm.k_of[i]) {
        throw std::invalid_argument("grouping: key group differs within query group");
      }
    }
    return gm;
  }
};

}  // namespace gtalab
