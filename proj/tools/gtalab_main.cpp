// SPDX-License-Identifier: Apache-2.0
//
// gtalab: one executable for the whole lab. Subcommands:
//   cost      analytic FLOP and cache tables for the shipped model presets
//   roofline  latency sweep over a hardware profile
//   check     verification suite (naive oracles, replay, rank, causality)
//   bench     wall-clock micro-benchmark of the forward paths
//   presets   dump the preset table
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtalab/io.hpp"
#include "gtalab/kv_cache.hpp"
#include "gtalab/oracle.hpp"
#include "gtalab/presets.hpp"
#include "gtalab/roofline.hpp"

namespace {

using namespace gtalab;

#ifndef GTALAB_DATA_DIR
#define GTALAB_DATA_DIR "data"
#endif

std::string data_path(const std::string& file) {
  return std::string(GTALAB_DATA_DIR) + "/" + file;
}

const ModelPreset& pick_preset(const std::vector<ModelPreset>& all,
                               const std::string& name) {
  for (const ModelPreset& p : all)
    if (p.name == name) return p;
  std::string msg = "unknown preset '" + name + "'; available:";
  for (const ModelPreset& p : all) msg += " " + p.name;
  throw std::runtime_error(msg);
}

std::vector<Phase> parse_phases(const std::string& phase) {
  if (phase == "prefill") return {Phase::prefill};
  if (phase == "decode") return {Phase::decode};
  return {Phase::prefill, Phase::decode};
}

CostBreakdown flops_for(const AttentionConfig& cfg, Phase phase, std::uint64_t n) {
  return phase == Phase::prefill ? prefill_flops(cfg, n) : decode_flops(cfg, n);
}

struct CostArgs {
  std::vector<std::string> presets;
  std::vector<std::uint64_t> lengths{1};
  std::string phase = "both";
  std::string format = "csv";
  std::string ratio;
  std::string presets_file = data_path("presets.json");
  bool table1 = false;
};

int run_cost(const CostArgs& args) {
  const std::vector<ModelPreset> all = load_presets(args.presets_file);

  if (args.table1) {
    std::cout << "preset,cache_floats\n";
    for (const ModelPreset& p : all)
      std::cout << p.name << ',' << cache_formula(p.attention, 1) << '\n';
    return 0;
  }

  std::vector<std::string> names = args.presets;
  if (names.empty())
    for (const ModelPreset& p : all) names.push_back(p.name);

  if (!args.ratio.empty()) {
    if (names.size() != 2)
      throw std::runtime_error("--ratio needs exactly two presets (numerator,denominator)");
    const ModelPreset& a = pick_preset(all, names[0]);
    const ModelPreset& b = pick_preset(all, names[1]);
    double num = 0.0, den = 0.0;
    if (args.ratio == "attention") {
      num = static_cast<double>(prefill_flops(a.attention, 1).attention_flops);
      den = static_cast<double>(prefill_flops(b.attention, 1).attention_flops);
    } else {
      num = static_cast<double>(cache_formula(a.attention, 1));
      den = static_cast<double>(cache_formula(b.attention, 1));
    }
    if (den == 0.0) throw std::runtime_error("--ratio: denominator is zero");
    std::cout << format_double(num / den) << '\n';
    return 0;
  }

  std::vector<const ModelPreset*> chosen;
  for (const std::string& name : names) chosen.push_back(&pick_preset(all, name));

  const std::vector<Phase> phases = parse_phases(args.phase);
  if (args.format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const ModelPreset* pp : chosen) {
      const ModelPreset& p = *pp;
      for (Phase ph : phases)
        for (std::uint64_t n : args.lengths) {
          const CostBreakdown c = flops_for(p.attention, ph, n);
          nlohmann::json row;
          row["mechanism"] = p.name;
          row["phase"] = to_string(ph);
          row["N"] = n;
          row["linear"] = c.linear_flops;
          row["attention"] = c.attention_flops;
          row["cache_floats"] = c.cache_floats;
          rows.push_back(row);
        }
    }
    std::cout << rows.dump(2) << '\n';
  } else {
    std::cout << "mechanism,phase,N,linear,attention,cache_floats\n";
    for (const ModelPreset* pp : chosen) {
      const ModelPreset& p = *pp;
      for (Phase ph : phases)
        for (std::uint64_t n : args.lengths) {
          const CostBreakdown c = flops_for(p.attention, ph, n);
          std::cout << p.name << ',' << to_string(ph) << ',' << n << ','
                    << c.linear_flops << ',' << c.attention_flops << ','
                    << c.cache_floats << '\n';
        }
    }
  }
  return 0;
}

struct RooflineArgs {
  std::vector<std::string> presets{"gta-1b", "gqa-1b"};
  std::vector<std::uint64_t> lengths{64, 256, 1024, 4096};
  std::vector<std::uint64_t> batches{1};
  std::string phase = "both";
  std::string profile;
  std::string hardware_file = data_path("hardware_profiles.json");
  std::string presets_file = data_path("presets.json");
  bool offload = false;
};

int run_roofline(const RooflineArgs& args) {
  const std::vector<ModelPreset> all = load_presets(args.presets_file);
  const std::vector<HardwareProfile> profiles = load_hardware_profiles(args.hardware_file);
  if (profiles.empty()) throw std::runtime_error("hardware file lists no profiles");
  const HardwareProfile hw =
      args.profile.empty() ? profiles.front() : find_profile(profiles, args.profile);

  std::vector<ModelPreset> chosen;
  for (const std::string& name : args.presets) chosen.push_back(pick_preset(all, name));

  std::vector<SweepRow> rows;
  for (Phase ph : parse_phases(args.phase)) {
    const std::vector<SweepRow> part =
        sweep(chosen, hw, args.lengths, args.batches, ph, args.offload);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  sweep_csv(rows, std::cout);
  return 0;
}

struct CheckArgs {
  std::string grid = "default";
  std::vector<std::uint64_t> seeds;
  std::string out = "-";
  bool inject_fault = false;
};

int run_check(const CheckArgs& args) {
  oracle::SuiteOptions opts =
      args.grid == "tiny" ? oracle::tiny_suite_options() : oracle::SuiteOptions{};
  if (!args.seeds.empty()) opts.seeds = args.seeds;
  opts.inject_fault = args.inject_fault;

  const std::vector<oracle::OracleReport> reports = oracle::run_suite(opts);

  std::ofstream file;
  if (args.out != "-") {
    file.open(args.out);
    if (!file) throw std::runtime_error("cannot open report file: " + args.out);
  }
  std::ostream& sink = args.out == "-" ? std::cout : file;
  for (const oracle::OracleReport& r : reports) sink << report_json_line(r) << '\n';

  std::size_t failures = 0;
  for (const oracle::OracleReport& r : reports)
    if (!r.passed) ++failures;
  std::cerr << "check: " << reports.size() << " cases, " << failures << " failures\n";
  return failures == 0 ? 0 : 1;
}

struct BenchArgs {
  std::vector<std::string> mechanisms;
  std::vector<std::uint64_t> lengths{32, 128};
  std::size_t repeat = 3;
  std::uint64_t seed = 1;
};

template <typename Fn>
double median_seconds(std::size_t repeat, Fn&& fn) {
  fn();  // warmup
  std::vector<double> times;
  for (std::size_t i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

int run_bench(const BenchArgs& args) {
  std::cout << "mechanism,phase,N,median_s\n";
  for (const AttentionConfig& base : oracle::suite_configs()) {
    if (base.mechanism == Mechanism::gta && base.gate_activation != ActivationKind::sigmoid)
      continue;  // one gta row is enough for timing
    const std::string name = to_string(base.mechanism);
    if (!args.mechanisms.empty() &&
        std::find(args.mechanisms.begin(), args.mechanisms.end(), name) ==
            args.mechanisms.end())
      continue;

    for (std::uint64_t n : args.lengths) {
      AttentionConfig cfg = base;
      cfg.max_seq_len = std::max<std::size_t>(cfg.max_seq_len, n + 1);
      const WeightSet w = init_weights(cfg, args.seed);
      SplitMix64 rng(args.seed * 31 + n);
      Matrix x(n, cfg.hidden_dim);
      for (double& v : x.data) v = rng.gaussian();

      const double pre = median_seconds(args.repeat, [&] { forward(x, w, cfg); });
      std::cout << name << ",prefill," << n << ',' << format_double(pre) << '\n';
      if (cfg.mechanism == Mechanism::gta) {
        const double direct =
            median_seconds(args.repeat, [&] { gta_forward_direct(x, w, cfg); });
        std::cout << "gta_direct,prefill," << n << ',' << format_double(direct) << '\n';
      }

      KVCacheState cache = make_cache(cfg);
      for (std::size_t t = 0; t + 1 < n; ++t) decode_step(row_of(x, t), cache, w, cfg);
      const Matrix last = row_of(x, n - 1);
      const double dec = median_seconds(args.repeat, [&] {
        KVCacheState scratch = cache;  // keep the timed step at a fixed length
        decode_step(last, scratch, w, cfg);
      });
      std::cout << name << ",decode," << n << ',' << format_double(dec) << '\n';
    }
  }
  return 0;
}

struct PresetsArgs {
  std::vector<std::string> presets;
  std::string presets_file = data_path("presets.json");
};

int run_presets(const PresetsArgs& args) {
  const std::vector<ModelPreset> all = load_presets(args.presets_file);
  std::cout << "name,layers,hidden_dim,intermediate,n_heads,n_q,n_k,n_c,d_h,d_l,"
               "mla_d_c,mla_d_rope,vocab,cache_floats,attn_params\n";
  for (const ModelPreset& p : all) {
    if (!args.presets.empty() &&
        std::find(args.presets.begin(), args.presets.end(), p.name) == args.presets.end())
      continue;
    const AttentionConfig& a = p.attention;
    std::cout << p.name << ',' << p.layers << ',' << a.hidden_dim << ',' << p.intermediate
              << ',' << a.n_heads << ',' << a.n_q << ',' << a.n_k << ',' << a.n_c << ','
              << a.head_dim << ',' << a.latent_dim << ',' << a.mla_d_c << ','
              << a.mla_d_rope << ',' << p.vocab << ',' << cache_formula(a, 1) << ','
              << attention_param_count(a) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytic cost model, roofline estimator, and verification suite "
               "for grouped-latent attention variants"};
  app.require_subcommand(1);

  CostArgs cost_args;
  CLI::App* cost = app.add_subcommand("cost", "FLOP and cache tables");
  cost->add_option("--preset", cost_args.presets, "preset names (comma separable)")
      ->delimiter(',');
  cost->add_option("--N", cost_args.lengths, "sequence lengths")->delimiter(',');
  cost->add_option("--phase", cost_args.phase, "prefill, decode, or both")
      ->check(CLI::IsMember({"prefill", "decode", "both"}));
  cost->add_option("--format", cost_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cost->add_option("--ratio", cost_args.ratio,
                   "print one ratio between exactly two presets")
      ->check(CLI::IsMember({"attention", "cache"}));
  cost->add_flag("--table-1", cost_args.table1, "cache floats per token per layer, all presets");
  cost->add_option("--presets-file", cost_args.presets_file, "preset JSON path");

  RooflineArgs roof_args;
  CLI::App* roof = app.add_subcommand("roofline", "latency sweep CSV");
  roof->add_option("--preset", roof_args.presets, "preset names")->delimiter(',');
  roof->add_option("--N", roof_args.lengths, "sequence lengths")->delimiter(',');
  roof->add_option("--batch", roof_args.batches, "batch sizes")->delimiter(',');
  roof->add_option("--phase", roof_args.phase, "prefill, decode, or both")
      ->check(CLI::IsMember({"prefill", "decode", "both"}));
  roof->add_option("--profile", roof_args.profile,
                   "hardware profile name (default: first in file)");
  roof->add_option("--hardware", roof_args.hardware_file, "hardware profile JSON path");
  roof->add_option("--presets-file", roof_args.presets_file, "preset JSON path");
  roof->add_flag("--offload", roof_args.offload, "route cache traffic over the offload link");

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "run the verification suite");
  check->add_option("--grid", check_args.grid, "tiny or default")
      ->check(CLI::IsMember({"tiny", "default"}));
  check->add_option("--seed", check_args.seeds, "seeds (repeatable)");
  check->add_option("--out", check_args.out, "JSON-lines report path, - for stdout");
  check->add_flag("--inject-fault", check_args.inject_fault,
                  "negate the fused output; the suite must fail (harness self-test)");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "micro-benchmark forward paths");
  bench->add_option("--mechanism", bench_args.mechanisms, "mechanisms to time")
      ->delimiter(',');
  bench->add_option("--N", bench_args.lengths, "sequence lengths")->delimiter(',');
  bench->add_option("--repeat", bench_args.repeat, "timed runs per case (median)");
  bench->add_option("--seed", bench_args.seed, "data seed");

  PresetsArgs presets_args;
  CLI::App* presets = app.add_subcommand("presets", "dump the preset table");
  presets->add_option("--preset", presets_args.presets, "filter by name")->delimiter(',');
  presets->add_option("--presets-file", presets_args.presets_file, "preset JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cost->parsed()) return run_cost(cost_args);
    if (roof->parsed()) return run_roofline(roof_args);
    if (check->parsed()) return run_check(check_args);
    if (bench->parsed()) return run_bench(bench_args);
    if (presets->parsed()) return run_presets(presets_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
