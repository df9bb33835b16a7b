// SPDX-License-Identifier: Apache-2.0
// Release gate for the lab. Each check prints exactly one PASS or FAIL line
// with the measured quantity and its threshold; the process exits nonzero if
// any check fails. Run it from the repository root or via ctest.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gtalab/forward.hpp"
#include "gtalab/io.hpp"
#include "gtalab/kv_cache.hpp"
#include "gtalab/oracle.hpp"
#include "gtalab/presets.hpp"
#include "gtalab/roofline.hpp"

#ifndef GTALAB_DATA_DIR
#define GTALAB_DATA_DIR "data"
#endif

using namespace gtalab;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << ' ' << name << ": " << detail << '\n';
  if (!ok) ++g_failures;
}

std::string sci(double v) { return format_double(v, 3); }

Matrix random_input(std::size_t n, std::size_t width, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix x(n, width);
  for (double& v : x.data) v = rng.gaussian();
  return x;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};
const std::vector<std::size_t> kLengths{1, 2, 4, 8, 16};

// Per-token cached floats for every shipped preset, as integers.
void check_cache_table() {
  const std::map<std::string, std::uint64_t> expected{
      {"mha-160m", 1536}, {"gqa-160m", 384},   {"mla-160m", 288},
      {"gta-160m-1", 192}, {"gta-160m-2", 192}, {"mha-500m", 2560},
      {"gqa-500m", 512},  {"mla-500m", 352},   {"gta-500m-3", 192},
      {"gta-500m-4", 320}, {"gqa-1b", 640},     {"gta-1b", 192}};
  const std::vector<ModelPreset> all = builtin_presets();
  bool ok = all.size() == expected.size();
  std::string bad;
  for (const ModelPreset& p : all) {
    const auto it = expected.find(p.name);
    const std::uint64_t got = cache_formula(p.attention, 1);
    if (it == expected.end() || got != it->second) {
      ok = false;
      if (bad.empty()) bad = p.name + " gave " + std::to_string(got);
    }
  }
  report("cache-table-exactness", ok,
         ok ? std::to_string(all.size()) + " presets match exactly"
            : "mismatch: " + bad);
}

// Attention-flop and cache-size ratios between matched presets, held as exact
// rationals and as their printed decimal forms.
void check_ratios() {
  const std::vector<ModelPreset> all = builtin_presets();
  const std::uint64_t gta_att =
      prefill_flops(find_preset(all, "gta-500m-3").attention, 1).attention_flops;
  const std::uint64_t mha_att =
      prefill_flops(find_preset(all, "mha-500m").attention, 1).attention_flops;
  const std::uint64_t gta_cache = cache_formula(find_preset(all, "gta-1b").attention, 1);
  const std::uint64_t gqa_cache = cache_formula(find_preset(all, "gqa-1b").attention, 1);

  const bool ok = gta_att * 8 == mha_att * 3 && gta_cache * 10 == gqa_cache * 3 &&
                  format_double(double(gta_att) / double(mha_att)) == "0.375" &&
                  format_double(double(gta_cache) / double(gqa_cache)) == "0.3";
  std::ostringstream d;
  d << "attention " << gta_att << "/" << mha_att << " = 0.375, cache " << gta_cache
    << "/" << gqa_cache << " = 0.3";
  report("flop-and-cache-ratios", ok, d.str());
}

// Every mechanism against the scalar-loop reference on the full grid.
void check_oracle_equivalence() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (const AttentionConfig& cfg : oracle::suite_configs())
    for (std::uint64_t seed : kSeeds) {
      const WeightSet w = init_weights(cfg, seed);
      for (std::size_t n : kLengths) {
        const Matrix x = random_input(n, cfg.hidden_dim, seed * 7919 + n);
        worst = std::max(worst,
                         max_abs_diff(forward(x, w, cfg), oracle::naive_attention(x, w, cfg)));
        ++cases;
      }
    }
  report("oracle-equivalence", worst <= 1e-12,
         "max abs err " + sci(worst) + " over " + std::to_string(cases) +
             " cases, tolerance 1e-12");
}

// The memoized shared-latent path against the definitional per-head path.
void check_fused_direct() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (const AttentionConfig& cfg : oracle::suite_configs()) {
    if (cfg.mechanism != Mechanism::gta) continue;
    for (std::uint64_t seed : kSeeds) {
      const WeightSet w = init_weights(cfg, seed);
      for (std::size_t n : kLengths) {
        const Matrix x = random_input(n, cfg.hidden_dim, seed * 271 + n);
        worst = std::max(worst, max_abs_diff(gta_forward_fused(x, w, cfg),
                                             gta_forward_direct(x, w, cfg)));
        ++cases;
      }
    }
  }
  report("fused-direct-equivalence", worst <= 1e-12,
         "max abs err " + sci(worst) + " over " + std::to_string(cases) +
             " cases, tolerance 1e-12");
}

// Incremental decoding must replay the batched pass, both from an empty cache
// and when continuing after a prefilled prefix.
void check_replay() {
  const std::size_t n = 32;
  const std::size_t split = 20;
  double worst = 0.0;
  for (const AttentionConfig& cfg : oracle::suite_configs())
    for (std::uint64_t seed : {1, 2, 3}) {
      const WeightSet w = init_weights(cfg, seed);
      const Matrix x = random_input(n, cfg.hidden_dim, seed * 17 + 5);
      const Matrix full = forward(x, w, cfg);

      KVCacheState cache = make_cache(cfg);
      for (std::size_t t = 0; t < n; ++t)
        worst = std::max(worst, max_abs_diff(decode_step(row_of(x, t), cache, w, cfg).output,
                                             row_of(full, t)));

      Matrix head(split, cfg.hidden_dim);
      for (std::size_t r = 0; r < split; ++r)
        for (std::size_t c = 0; c < cfg.hidden_dim; ++c) head(r, c) = x(r, c);
      PrefillResult pr = prefill(head, w, cfg);
      for (std::size_t t = split; t < n; ++t)
        worst = std::max(worst,
                         max_abs_diff(decode_step(row_of(x, t), pr.cache, w, cfg).output,
                                      row_of(full, t)));
    }
  report("prefill-decode-replay", worst <= 1e-10,
         "max abs err " + sci(worst) + " at N=32, all mechanisms, tolerance 1e-10");
}

// Analytic gradients of the gated shared-latent path against central
// differences, for every gate nonlinearity and seed.
void check_gradients() {
  double worst = 0.0;
  std::size_t failures = 0;
  for (const AttentionConfig& cfg : oracle::grad_check_configs()) {
    for (std::uint64_t seed : kSeeds) {
      const oracle::GradCheckResult r = oracle::gta_grad_check(cfg, seed);
      worst = std::max(worst, r.max_rel_err);
      failures += r.failures;
    }
  }
  report("gta-gradient-check", failures == 0 && worst < 1e-5,
         "max rel err " + sci(worst) + " over 3 gates x 5 seeds, tolerance 1e-5");
}

// Parameter ties that collapse one mechanism onto another. Each pair shares
// the relevant weight matrices, so their outputs must coincide.
void check_degeneracy() {
  double worst = 0.0;
  const std::size_t H = 24, d_h = 6;
  auto base = [&](Mechanism m) {
    AttentionConfig c;
    c.mechanism = m;
    c.hidden_dim = H;
    c.n_heads = 4;
    c.head_dim = d_h;
    c.rope.head_dim = d_h;
    c.max_seq_len = 64;
    return c;
  };

  for (std::uint64_t seed : {1, 2})
    for (std::size_t n : {1, 4, 9}) {
      // One key/value pair per head turns grouped keys into plain per-head
      // attention.
      AttentionConfig mha = base(Mechanism::mha);
      mha.n_q = mha.n_k = mha.n_c = 4;
      const WeightSet wm = init_weights(mha, seed);
      const Matrix x = random_input(n, H, seed * 53 + n);
      const Matrix ref = mha_forward(x, wm, mha);

      AttentionConfig gqa = base(Mechanism::gqa);
      gqa.n_q = 4;
      gqa.n_k = gqa.n_c = 4;
      worst = std::max(worst, max_abs_diff(gqa_forward(x, wm, gqa), ref));

      AttentionConfig gva = base(Mechanism::gva);
      gva.n_q = gva.n_k = 4;
      gva.n_c = 4;
      worst = std::max(worst, max_abs_diff(gva_forward(x, wm, gva), ref));

      // Identity value maps make the per-head value construction read the
      // shared sources verbatim.
      AttentionConfig gva2 = base(Mechanism::gva);
      gva2.n_q = gva2.n_k = 2;
      gva2.n_c = 4;
      const WeightSet wv = init_weights(gva2, seed);
      AttentionConfig gha = base(Mechanism::gha);
      gha.n_q = gha.n_k = 2;
      gha.n_c = 4;
      gha.latent_dim = d_h;
      WeightSet wh = wv;
      wh.w_p.assign(4, Matrix::identity(d_h));
      worst = std::max(worst,
                       max_abs_diff(gha_forward(x, wh, gha), gva_forward(x, wv, gva2)));

      // A width-matched latent with the gate pinned to one is exactly the
      // ungated shared-value mechanism.
      AttentionConfig gta = base(Mechanism::gta);
      gta.n_q = 2;
      gta.n_k = 1;
      gta.n_c = 2;
      gta.latent_dim = d_h;
      gta.gate_activation = ActivationKind::one;
      const WeightSet wt = init_weights(gta, seed);
      AttentionConfig gha2 = base(Mechanism::gha);
      gha2.n_q = 2;
      gha2.n_k = 1;
      gha2.n_c = 2;
      gha2.latent_dim = d_h;
      WeightSet wh2 = wt;
      wh2.w_v = wt.w_c;
      worst = std::max(worst,
                       max_abs_diff(gta_forward_direct(x, wt, gta), gha_forward(x, wh2, gha2)));
    }

  report("degeneracy-lattice", worst <= 1e-12,
         "max abs err " + sci(worst) +
             " across gqa=mha, gva=mha, gha=gva, gta=gha ties, tolerance 1e-12");
}

// The latency estimate for the small-cache preset must never exceed its
// parameter-matched baseline on any shipped accelerator, and the decode
// advantage must grow with history.
void check_roofline() {
  const std::vector<ModelPreset> all = builtin_presets();
  const ModelPreset gta = find_preset(all, "gta-1b");
  const ModelPreset gqa = find_preset(all, "gqa-1b");
  const std::vector<HardwareProfile> profiles =
      load_hardware_profiles(std::string(GTALAB_DATA_DIR) + "/hardware_profiles.json");
  const std::vector<std::uint64_t> grid{64, 256, 1024, 4096};

  double min_margin = 1e300;
  bool gap_monotone = true;
  for (const HardwareProfile& hw : profiles) {
    for (Phase phase : {Phase::prefill, Phase::decode})
      for (std::uint64_t n : grid)
        for (std::uint64_t batch : {1, 8}) {
          const double margin = estimate(gqa, hw, n, batch, phase).total_s -
                                estimate(gta, hw, n, batch, phase).total_s;
          min_margin = std::min(min_margin, margin);
        }
    double prev = -1.0;
    for (std::uint64_t n : grid) {
      const double gap = estimate(gqa, hw, n, 1, Phase::decode).total_s -
                         estimate(gta, hw, n, 1, Phase::decode).total_s;
      if (gap < prev) gap_monotone = false;
      prev = gap;
    }
  }
  report("roofline-dominance", min_margin >= 0.0 && gap_monotone,
         "min total_s margin " + sci(min_margin) + " s over " +
             std::to_string(profiles.size()) +
             " profiles, decode gap nondecreasing: " + (gap_monotone ? "yes" : "no"));
}

}  // namespace

int main() {
  check_cache_table();
  check_ratios();
  check_oracle_equivalence();
  check_fused_direct();
  check_replay();
  check_gradients();
  check_degeneracy();
  check_roofline();

  std::cout << (g_failures == 0 ? "acceptance: all checks passed"
                                : "acceptance: " + std::to_string(g_failures) +
                                      " check(s) failed")
            << '\n';
  return g_failures == 0 ? 0 : 1;
}
