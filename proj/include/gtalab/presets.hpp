// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtalab/cost_model.hpp"

namespace gtalab {

// Shipped model scales. Names follow <mechanism>-<scale>[-variant]; the
// mechanism is recoverable from the name prefix, which is also how the preset
// file encodes it.
inline std::vector<ModelPreset> builtin_presets() {
  auto make = [](const std::string& name, Mechanism mech, std::size_t layers,
                 std::size_t H, std::size_t inter, std::size_t n_h, std::size_t vocab,
                 std::size_t n_q, std::size_t n_k, std::size_t n_c, std::size_t d_h,
                 std::size_t d_l, std::size_t mla_d_c, std::size_t mla_d_rope) {
    ModelPreset p;
    p.name = name;
    p.layers = layers;
    p.intermediate = inter;
    p.vocab = vocab;
    AttentionConfig& a = p.attention;
    a.mechanism = mech;
    a.hidden_dim = H;
    a.n_heads = n_h;
    a.n_q = n_q;
    a.n_k = n_k;
    a.n_c = n_c;
    a.head_dim = d_h;
    a.latent_dim = d_l;
    a.mla_d_c = mla_d_c;
    a.mla_d_rope = mla_d_rope;
    a.mla_d_nope = mech == Mechanism::mla ? d_h - mla_d_rope : 0;
    a.rope.head_dim = mech == Mechanism::mla ? mla_d_rope : d_h;
    a.max_seq_len = 1024;
    a.validate();
    return p;
  };
  std::vector<ModelPreset> v;
  // 160M family: 24 layers, hidden 768, MLP 1920, 12 heads of 64, vocab 32000.
  v.push_back(make("mha-160m", Mechanism::mha, 24, 768, 1920, 12, 32000, 12, 12, 12, 64, 0, 0, 0));
  v.push_back(make("gqa-160m", Mechanism::gqa, 24, 768, 1920, 12, 32000, 12, 3, 3, 64, 0, 0, 0));
  v.push_back(make("mla-160m", Mechanism::mla, 24, 768, 1920, 12, 32000, 12, 1, 1, 64, 0, 256, 32));
  v.push_back(make("gta-160m-1", Mechanism::gta, 24, 768, 1920, 12, 32000, 3, 1, 1, 64, 128, 0, 0));
  v.push_back(make("gta-160m-2", Mechanism::gta, 24, 768, 1920, 12, 32000, 6, 1, 1, 64, 128, 0, 0));
  // 500M family: 24 layers, hidden 1280, MLP 3584, 20 heads of 64, vocab 32000.
  v.push_back(make("mha-500m", Mechanism::mha, 24, 1280, 3584, 20, 32000, 20, 20, 20, 64, 0, 0, 0));
  v.push_back(make("gqa-500m", Mechanism::gqa, 24, 1280, 3584, 20, 32000, 20, 4, 4, 64, 0, 0, 0));
  v.push_back(make("mla-500m", Mechanism::mla, 24, 1280, 3584, 20, 32000, 20, 1, 1, 64, 0, 320, 32));
  v.push_back(make("gta-500m-3", Mechanism::gta, 24, 1280, 3584, 20, 32000, 5, 1, 1, 64, 128, 0, 0));
  v.push_back(make("gta-500m-4", Mechanism::gta, 24, 1280, 3584, 20, 32000, 10, 1, 2, 64, 128, 0, 0));
  // 1B family: 54 layers, hidden 1280, MLP 3584, 20 heads of 64, vocab 128256.
  v.push_back(make("gqa-1b", Mechanism::gqa, 54, 1280, 3584, 20, 128256, 20, 5, 5, 64, 0, 0, 0));
  v.push_back(make("gta-1b", Mechanism::gta, 54, 1280, 3584, 20, 128256, 5, 1, 1, 64, 128, 0, 0));
  return v;
}

inline ModelPreset find_preset(const std::vector<ModelPreset>& presets,
                               const std::string& name) {
  for (const ModelPreset& p : presets)
    if (p.name == name) return p;
  std::string known;
  for (const ModelPreset& p : presets) known += (known.empty() ? "" : ", ") + p.name;
  throw std::invalid_argument("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace gtalab
