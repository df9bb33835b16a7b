// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "gtalab/presets.hpp"

using namespace gtalab;

namespace {

ModelPreset preset(const std::string& name) {
  return find_preset(builtin_presets(), name);
}

// Small shapes used for the hand-checked arithmetic below.
AttentionConfig tiny(Mechanism m) {
  AttentionConfig c;
  c.mechanism = m;
  c.hidden_dim = 24;
  c.n_heads = 4;
  c.head_dim = 6;
  c.rope.head_dim = 6;
  c.max_seq_len = 64;
  switch (m) {
    case Mechanism::mha:
      c.n_q = c.n_k = c.n_c = 4;
      break;
    case Mechanism::gqa:
      c.n_q = 4;
      c.n_k = c.n_c = 2;
      break;
    case Mechanism::gta:
      c.n_q = 2;
      c.n_k = 1;
      c.n_c = 2;
      c.latent_dim = 10;
      break;
    case Mechanism::mla:
      c.n_q = 4;
      c.n_k = c.n_c = 1;
      c.mla_d_c = 10;
      c.mla_d_rope = 2;
      c.mla_d_nope = 4;
      c.rope.head_dim = 2;
      break;
    default:
      break;
  }
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("cached floats per token match the published model scales") {
  const std::map<std::string, std::uint64_t> expected{
      {"mha-160m", 1536}, {"gqa-160m", 384},   {"mla-160m", 288},
      {"gta-160m-1", 192}, {"gta-160m-2", 192}, {"mha-500m", 2560},
      {"gqa-500m", 512},  {"mla-500m", 352},   {"gta-500m-3", 192},
      {"gta-500m-4", 320}, {"gqa-1b", 640},     {"gta-1b", 192}};
  const std::vector<ModelPreset> all = builtin_presets();
  REQUIRE(all.size() == expected.size());
  for (const ModelPreset& p : all) {
    INFO(p.name);
    REQUIRE(expected.count(p.name) == 1);
    CHECK(cache_formula(p.attention, 1) == expected.at(p.name));
  }
}

TEST_CASE("cache growth is exactly linear in resident tokens") {
  for (const ModelPreset& p : builtin_presets())
    for (std::uint64_t n : {2, 7, 1024})
      CHECK(cache_formula(p.attention, n) == n * cache_formula(p.attention, 1));
}

TEST_CASE("prefill flop polynomials agree with hand-expanded values") {
  // mha, H=24, 4 heads of 6, N=5:
  //   linear 4*5*24*24, attention 2*4*6*5*5, cache 2*4*6*5.
  const CostBreakdown mha = prefill_flops(tiny(Mechanism::mha), 5);
  CHECK(mha.linear_flops == 11520);
  CHECK(mha.attention_flops == 1200);
  CHECK(mha.cache_floats == 240);

  // gqa, 2 KV groups, N=5:
  //   linear 2*5*24*24 + 2*2*6*5*24, attention unchanged, cache 2*2*6*5.
  const CostBreakdown gqa = prefill_flops(tiny(Mechanism::gqa), 5);
  CHECK(gqa.linear_flops == 8640);
  CHECK(gqa.attention_flops == 1200);
  CHECK(gqa.cache_floats == 120);

  // gta, n_q=2, n_k=1, n_c=2, d_l=10, N=3:
  //   linear 2*3*24*24 + (12+6+20+10)*3*24 = 3456 + 3456
  //   attention 2*(6+10)*3*3, cache (6+20)*3.
  const CostBreakdown gta = prefill_flops(tiny(Mechanism::gta), 3);
  CHECK(gta.linear_flops == 6912);
  CHECK(gta.attention_flops == 288);
  CHECK(gta.cache_floats == 78);

  // mla, d_c=10, d_rope=2, d_nope=4, N=3:
  //   linear 12*3*24 + 4*6*3*24 + 2*4*10*4*3 + 3*24*24 = 864+1728+960+1728
  //   attention 4*(2+8)*3*3, cache 12*3.
  const CostBreakdown mla = prefill_flops(tiny(Mechanism::mla), 3);
  CHECK(mla.linear_flops == 5280);
  CHECK(mla.attention_flops == 360);
  CHECK(mla.cache_floats == 36);
}

TEST_CASE("decode flop polynomials agree with hand-expanded values") {
  // Seven tokens of history, one generated token.
  const CostBreakdown mha = decode_flops(tiny(Mechanism::mha), 7);
  CHECK(mha.linear_flops == 2304);  // 4*24*24
  CHECK(mha.attention_flops == 336);  // 2*4*6*7

  const CostBreakdown gta = decode_flops(tiny(Mechanism::gta), 7);
  CHECK(gta.linear_flops == 2304);  // 2*24*24 + 48*24
  CHECK(gta.attention_flops == 336);  // score/mix over all heads
  CHECK(gta.cache_floats == 182);  // (6+20)*7 floats read back

  CHECK(decode_flops(tiny(Mechanism::gqa), 7).linear_flops == 1728);  // 2*576+576
  CHECK(decode_flops(tiny(Mechanism::mla), 7).linear_flops ==
        288 + 576 + 2240 + 576);  // latent decompression keeps the N term
}

TEST_CASE("prefilling one token costs the same linear work as decoding it") {
  for (const ModelPreset& p : builtin_presets()) {
    INFO(p.name);
    CHECK(prefill_flops(p.attention, 1).linear_flops ==
          decode_flops(p.attention, 1).linear_flops);
  }
}

TEST_CASE("decoding against empty history does no attention work") {
  for (const ModelPreset& p : builtin_presets()) {
    const CostBreakdown c = decode_flops(p.attention, 0);
    INFO(p.name);
    CHECK(c.attention_flops == 0);
    CHECK(c.cache_floats == 0);
  }
}

TEST_CASE("costs are nondecreasing in sequence length") {
  const std::vector<std::uint64_t> grid{1, 2, 16, 128, 1024, 8192};
  for (const ModelPreset& p : builtin_presets()) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(prefill_flops(p.attention, grid[i]).total() >=
            prefill_flops(p.attention, grid[i - 1]).total());
      CHECK(decode_flops(p.attention, grid[i]).total() >=
            decode_flops(p.attention, grid[i - 1]).total());
    }
  }
}

TEST_CASE("gta-1b and gqa-1b are parameter-matched twins") {
  const ModelPreset gta = preset("gta-1b");
  const ModelPreset gqa = preset("gqa-1b");

  CHECK(attention_param_count(gta.attention) == 4096000);
  CHECK(attention_param_count(gqa.attention) == 4096000);
  CHECK(streamed_param_count(gta) == 1128529920);
  CHECK(streamed_param_count(gqa) == 1128529920);

  // With equal linear coefficients, every flop gap between the two comes from
  // the attention term and the cache, never from the projections.
  for (std::uint64_t n : {1, 64, 4096}) {
    CHECK(prefill_flops(gta.attention, n).linear_flops ==
          prefill_flops(gqa.attention, n).linear_flops);
    CHECK(decode_flops(gta.attention, n).linear_flops ==
          decode_flops(gqa.attention, n).linear_flops);
  }
}

TEST_CASE("headline cost ratios hold as exact rationals") {
  // Attention flops, gta-500m-3 over mha-500m: 960/2560 == 3/8.
  const std::uint64_t gta_att =
      prefill_flops(preset("gta-500m-3").attention, 1).attention_flops;
  const std::uint64_t mha_att =
      prefill_flops(preset("mha-500m").attention, 1).attention_flops;
  CHECK(gta_att == 960);
  CHECK(mha_att == 2560);
  CHECK(gta_att * 8 == mha_att * 3);

  // Cache floats, gta-1b over gqa-1b: 192/640 == 3/10.
  const std::uint64_t gta_cache = cache_formula(preset("gta-1b").attention, 1);
  const std::uint64_t gqa_cache = cache_formula(preset("gqa-1b").attention, 1);
  CHECK(gta_cache * 10 == gqa_cache * 3);
}

TEST_CASE("whole-model cost assembles layers, MLP and head") {
  const ModelPreset p = preset("gqa-160m");
  const std::uint64_t N = 16, batch = 2;

  const ModelCost pre = full_model_cost(p, N, batch, Phase::prefill);
  const CostBreakdown layer = prefill_flops(p.attention, N);
  CHECK(pre.attn_linear == batch * 24 * layer.linear_flops);
  CHECK(pre.attn_attention == batch * 24 * layer.attention_flops);
  CHECK(pre.mlp == batch * 24 * 2 * N * 768 * 1920 * 3);
  CHECK(pre.head == batch * 2 * N * 768 * 32000);
  CHECK(pre.total() == pre.attn_linear + pre.attn_attention + pre.mlp + pre.head);

  // Decode charges MLP and head for the single generated token only.
  const ModelCost dec = full_model_cost(p, N, batch, Phase::decode);
  CHECK(dec.mlp == batch * 24 * 2 * 768 * 1920 * 3);
  CHECK(dec.head == batch * 2 * 768 * 32000);

  CHECK_THROWS_AS(full_model_cost(p, N, 0, Phase::prefill), std::invalid_argument);
  ModelPreset bare;
  bare.name = "bare";
  CHECK_THROWS_AS(full_model_cost(bare, N, 1, Phase::prefill), std::invalid_argument);
}

TEST_CASE("find_preset lists what it knows when the name is wrong") {
  const std::vector<ModelPreset> all = builtin_presets();
  CHECK(find_preset(all, "gta-1b").layers == 54);
  try {
    find_preset(all, "gta-9000");
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gta-9000") != std::string::npos);
    CHECK(msg.find("mha-160m") != std::string::npos);
  }
}
