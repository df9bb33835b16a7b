// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gtalab/backward.hpp"
#include "gtalab/forward.hpp"
#include "gtalab/kv_cache.hpp"

namespace gtalab {
namespace oracle {

// Everything in this namespace is written as plain scalar loops on purpose:
// no shared attention maps, no fused products, no reuse of the fast-path
// helpers. It is the ground truth the fast paths are checked against, so it
// must not share their shortcuts.

inline void rotate_pairs(std::vector<double>& v, double pos, double theta_base) {
  const std::size_t width = v.size();
  for (std::size_t k = 0; k + 1 < width; k += 2) {
    const double freq = std::pow(theta_base, -static_cast<double>(k) /
                                                 static_cast<double>(width));
    const double angle = pos * freq;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double a = v[k];
    const double b = v[k + 1];
    v[k] = a * c - b * s;
    v[k + 1] = a * s + b * c;
  }
}

// Reference forward pass covering every mechanism, one scalar at a time.
inline Matrix naive_attention(const Matrix& x, const WeightSet& w,
                              const AttentionConfig& cfg) {
  cfg.validate();
  const std::size_t N = x.rows;
  const std::size_t H = cfg.hidden_dim;
  const std::size_t n_h = cfg.n_heads;
  const std::size_t d_h = cfg.head_dim;
  const std::size_t d_l = cfg.latent_dim;
  const double theta = cfg.rope.theta_base;

  const bool modulo =
      cfg.grouping == GroupingRule::modulo || cfg.mechanism == Mechanism::gqa;
  auto group = [&](std::size_t head, std::size_t count) {
    return modulo ? head % count : head / (n_h / count);
  };

  auto project_row = [&](const Matrix& weight, std::size_t row, std::size_t c0,
                         std::size_t width) {
    std::vector<double> out(width, 0.0);
    for (std::size_t j = 0; j < width; ++j)
      for (std::size_t h = 0; h < H; ++h) out[j] += x(row, h) * weight(h, c0 + j);
    return out;
  };

  Matrix out(N, H);
  for (std::size_t t = 0; t < N; ++t) {
    for (std::size_t i = 0; i < n_h; ++i) {
      std::vector<double> scores(t + 1, 0.0);
      std::vector<std::vector<double>> vals(t + 1);

      if (cfg.mechanism == Mechanism::mla) {
        const std::size_t d_n = cfg.mla_d_nope;
        const std::size_t d_r = cfg.mla_d_rope;
        std::vector<double> qn = project_row(w.w_q, t, i * d_n, d_n);
        std::vector<double> qr = project_row(w.w_qr[i], t, 0, d_r);
        rotate_pairs(qr, static_cast<double>(t), theta);
        for (std::size_t s = 0; s <= t; ++s) {
          std::vector<double> ckv = project_row(w.w_dkv, s, 0, cfg.mla_d_c);
          std::vector<double> kr = project_row(w.w_kr, s, 0, d_r);
          rotate_pairs(kr, static_cast<double>(s), theta);
          double score = 0.0;
          for (std::size_t j = 0; j < d_n; ++j) {
            double kj = 0.0;
            for (std::size_t d = 0; d < ckv.size(); ++d) kj += ckv[d] * w.w_uk[i](d, j);
            score += qn[j] * kj;
          }
          for (std::size_t j = 0; j < d_r; ++j) score += qr[j] * kr[j];
          scores[s] = score / std::sqrt(static_cast<double>(d_n + d_r));
          std::vector<double> v(d_n, 0.0);
          for (std::size_t j = 0; j < d_n; ++j)
            for (std::size_t d = 0; d < ckv.size(); ++d) v[j] += ckv[d] * w.w_uv[i](d, j);
          vals[s] = std::move(v);
        }
      } else {
        std::vector<double> q = project_row(w.w_q, t, group(i, cfg.n_q) * d_h, d_h);
        rotate_pairs(q, static_cast<double>(t), theta);
        std::vector<double> gate_pre;
        if (cfg.mechanism == Mechanism::gta) {
          gate_pre.assign(d_h, 0.0);
          for (std::size_t j = 0; j < d_h; ++j)
            for (std::size_t h = 0; h < H; ++h) gate_pre[j] += x(t, h) * w.w_g[i](h, j);
        }
        for (std::size_t s = 0; s <= t; ++s) {
          std::vector<double> k = project_row(w.w_k, s, group(i, cfg.n_k) * d_h, d_h);
          rotate_pairs(k, static_cast<double>(s), theta);
          double score = 0.0;
          for (std::size_t j = 0; j < d_h; ++j) score += q[j] * k[j];
          scores[s] = score / std::sqrt(static_cast<double>(d_h));

          std::vector<double> v(d_h, 0.0);
          switch (cfg.mechanism) {
            case Mechanism::mha:
            case Mechanism::gva:
              v = project_row(w.w_v, s, i * d_h, d_h);
              break;
            case Mechanism::gqa:
              v = project_row(w.w_v, s, (i % cfg.n_k) * d_h, d_h);
              break;
            case Mechanism::gha: {
              std::vector<double> src =
                  project_row(w.w_v, s, group(i, cfg.n_c) * d_h, d_h);
              for (std::size_t j = 0; j < d_h; ++j)
                for (std::size_t d = 0; d < d_h; ++d) v[j] += src[d] * w.w_p[i](d, j);
              break;
            }
            case Mechanism::gta: {
              std::vector<double> lat =
                  project_row(w.w_c, s, group(i, cfg.n_c) * d_l, d_l);
              for (std::size_t j = 0; j < d_h; ++j) {
                double u = 0.0;
                for (std::size_t d = 0; d < d_l; ++d) u += lat[d] * w.w_p[i](d, j);
                v[j] = u * activate(cfg.gate_activation, gate_pre[j]);
              }
              break;
            }
            default:
              break;
          }
          vals[s] = std::move(v);
        }
      }

      double mx = scores[0];
      for (std::size_t s = 1; s <= t; ++s) mx = std::max(mx, scores[s]);
      double denom = 0.0;
      std::vector<double> att(t + 1);
      for (std::size_t s = 0; s <= t; ++s) {
        att[s] = std::exp(scores[s] - mx);
        denom += att[s];
      }
      for (std::size_t s = 0; s <= t; ++s) att[s] /= denom;

      const std::size_t width = vals[0].size();
      for (std::size_t j = 0; j < width; ++j) {
        double oj = 0.0;
        for (std::size_t s = 0; s <= t; ++s) oj += att[s] * vals[s][j];
        for (std::size_t h = 0; h < H; ++h) out(t, h) += oj * w.w_o[i](j, h);
      }
    }
  }
  return out;
}

// Central finite difference of a scalar function with respect to every entry
// of `target`, which is perturbed in place and restored.
template <typename LossFn>
inline Matrix fd_matrix_grad(LossFn&& loss, Matrix& target, double h) {
  Matrix g(target.rows, target.cols);
  for (std::size_t idx = 0; idx < target.data.size(); ++idx) {
    const double saved = target.data[idx];
    target.data[idx] = saved + h;
    const double lp = loss();
    target.data[idx] = saved - h;
    const double lm = loss();
    target.data[idx] = saved;
    g.data[idx] = (lp - lm) / (2.0 * h);
  }
  return g;
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;   // both measurements under the floor
  std::size_t failures = 0;  // rel err at or above tolerance
  std::string worst;         // parameter name of the max
};

// Compares the analytic gta gradients against central differences of
//   loss = sum(forward(x) .* upstream)
// on a small random instance. Weights use the seeded init with the dense
// projections rescaled to O(0.3) entries so gradient components sit well above
// the finite-difference noise floor.
inline GradCheckResult gta_grad_check(const AttentionConfig& cfg, std::uint64_t seed,
                                      std::size_t N = 3, double h = 1e-5,
                                      double rel_tol = 1e-5, double floor = 1e-8) {
  WeightSet w = init_weights(cfg, seed);
  auto rescale = [](Matrix& m) {
    for (double& v : m.data) v *= 15.0;
  };
  rescale(w.w_q);
  rescale(w.w_k);
  rescale(w.w_c);
  for (Matrix& m : w.w_g) rescale(m);
  for (Matrix& m : w.w_o) rescale(m);

  SplitMix64 rng(seed ^ 0x5bd1e995u);
  Matrix x(N, cfg.hidden_dim);
  for (double& v : x.data) v = rng.gaussian();
  Matrix upstream(N, cfg.hidden_dim);
  for (double& v : upstream.data) v = rng.gaussian();

  auto loss = [&]() {
    const Matrix out = gta_forward_direct(x, w, cfg);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      acc += out.data[i] * upstream.data[i];
    return acc;
  };

  const GtaGradients g = gta_backward(x, w, cfg, upstream);

  GradCheckResult res;
  auto compare = [&](const Matrix& analytic, Matrix& target, const std::string& name) {
    const Matrix fd = fd_matrix_grad(loss, target, h);
    for (std::size_t idx = 0; idx < fd.data.size(); ++idx) {
      const double a = analytic.data[idx];
      const double f = fd.data[idx];
      const double mag = std::max(std::fabs(a), std::fabs(f));
      if (mag <= floor) {
        ++res.skipped;
        continue;
      }
      const double rel = std::fabs(a - f) / mag;
      ++res.checked;
      if (rel >= rel_tol) ++res.failures;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = name;
      }
    }
  };

  compare(g.d_x, x, "x");
  compare(g.d_w_q, w.w_q, "w_q");
  compare(g.d_w_k, w.w_k, "w_k");
  compare(g.d_w_c, w.w_c, "w_c");
  for (std::size_t i = 0; i < cfg.n_heads; ++i) {
    compare(g.d_w_p[i], w.w_p[i], "w_p[" + std::to_string(i) + "]");
    compare(g.d_w_g[i], w.w_g[i], "w_g[" + std::to_string(i) + "]");
    compare(g.d_w_o[i], w.w_o[i], "w_o[" + std::to_string(i) + "]");
  }
  return res;
}

struct OracleReport {
  std::string case_name;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // abs error over the reference magnitude
  double tolerance = 0.0;    // on the absolute error
  bool passed = false;
  std::uint64_t seed = 0;
};

struct SuiteOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::size_t> lengths{1, 2, 4, 8, 16};
  bool inject_fault = false;  // negates the fused output; the suite must notice
};

inline SuiteOptions tiny_suite_options() {
  SuiteOptions o;
  o.seeds = {1, 2};
  o.lengths = {1, 2, 4};
  return o;
}

// Small but fully-divisible configs, one per mechanism plus one per extra gate
// nonlinearity.
inline std::vector<AttentionConfig> suite_configs() {
  auto base = [](Mechanism m) {
    AttentionConfig c;
    c.mechanism = m;
    c.hidden_dim = 24;
    c.n_heads = 4;
    c.head_dim = 6;
    c.rope.head_dim = 6;
    c.max_seq_len = 64;
    return c;
  };
  std::vector<AttentionConfig> v;
  {
    AttentionConfig c = base(Mechanism::mha);
    c.n_q = c.n_k = c.n_c = 4;
    v.push_back(c);
  }
  {
    AttentionConfig c = base(Mechanism::gqa);
    c.n_q = 4;
    c.n_k = c.n_c = 2;
    v.push_back(c);
  }
  {
    AttentionConfig c = base(Mechanism::mla);
    c.n_q = 4;
    c.n_k = c.n_c = 1;
    c.mla_d_c = 10;
    c.mla_d_nope = 4;
    c.mla_d_rope = 2;
    c.rope.head_dim = 2;
    v.push_back(c);
  }
  {
    AttentionConfig c = base(Mechanism::gva);
    c.n_q = c.n_k = 2;
    c.n_c = 4;
    v.push_back(c);
  }
  {
    AttentionConfig c = base(Mechanism::gha);
    c.n_q = 2;
    c.n_k = 1;
    c.n_c = 2;
    c.latent_dim = 6;
    v.push_back(c);
  }
  for (ActivationKind act : {ActivationKind::sigmoid, ActivationKind::silu,
                             ActivationKind::relu_squared}) {
    AttentionConfig c = base(Mechanism::gta);
    c.n_q = 2;
    c.n_k = 1;
    c.n_c = 2;
    c.latent_dim = 10;
    c.gate_activation = act;
    v.push_back(c);
  }
  return v;
}

// Instances for the finite-difference comparison. Deliberately narrower than
// the forward-suite shapes: the central-difference probe resolves a gradient
// component only down to roughly eps * |loss| / (2h), so the loss has to stay
// small for the componentwise tolerance to be meaningful. These still cover
// grouped queries, shared keys, both latent blocks, a wide latent and every
// gate nonlinearity.
inline std::vector<AttentionConfig> grad_check_configs() {
  std::vector<AttentionConfig> v;
  for (ActivationKind act : {ActivationKind::sigmoid, ActivationKind::silu,
                             ActivationKind::relu_squared}) {
    AttentionConfig c;
    c.mechanism = Mechanism::gta;
    c.hidden_dim = 8;
    c.n_heads = 4;
    c.n_q = 2;
    c.n_k = 1;
    c.n_c = 2;
    c.head_dim = 2;
    c.latent_dim = 4;
    c.rope.head_dim = 2;
    c.gate_activation = act;
    c.max_seq_len = 16;
    v.push_back(c);
  }
  return v;
}

inline std::vector<OracleReport> run_suite(const SuiteOptions& opts) {
  std::vector<OracleReport> reports;
  auto record = [&reports](std::string name, double err, double ref_mag, double tol,
                           std::uint64_t seed) {
    OracleReport r;
    r.case_name = std::move(name);
    r.max_abs_err = err;
    r.max_rel_err = ref_mag > 0.0 ? err / ref_mag : err;
    r.tolerance = tol;
    r.passed = err <= tol;
    r.seed = seed;
    reports.push_back(std::move(r));
  };

  for (const AttentionConfig& cfg : suite_configs()) {
    std::string label = to_string(cfg.mechanism);
    if (cfg.mechanism == Mechanism::gta)
      label += std::string("/") + to_string(cfg.gate_activation);

    for (std::uint64_t seed : opts.seeds) {
      const WeightSet w = init_weights(cfg, seed);

      if (cfg.mechanism == Mechanism::gta) {
        bool all_full_rank = true;
        for (const Matrix& p : w.w_p)
          all_full_rank = all_full_rank && column_rank(p) == cfg.head_dim;
        record("rank/" + label + "/seed=" + std::to_string(seed),
               all_full_rank ? 0.0 : 1.0, 0.0, 0.0, seed);
      }

      for (std::size_t n : opts.lengths) {
        SplitMix64 rng(seed * 7919 + n);
        Matrix x(n, cfg.hidden_dim);
        for (double& v : x.data) v = rng.gaussian();
        const std::string tail =
            "/N=" + std::to_string(n) + "/seed=" + std::to_string(seed);

        {
          const Matrix ref = naive_attention(x, w, cfg);
          Matrix fast = forward(x, w, cfg);
          if (cfg.mechanism == Mechanism::gta && opts.inject_fault)
            for (double& v : fast.data) v = -v;
          record("equiv/" + label + tail, max_abs_diff(fast, ref), max_abs(ref), 1e-12,
                 seed);
        }

        if (cfg.mechanism == Mechanism::gta) {
          const Matrix direct = gta_forward_direct(x, w, cfg);
          Matrix fused = gta_forward_fused(x, w, cfg);
          if (opts.inject_fault)
            for (double& v : fused.data) v = -v;
          record("fused_direct/" + label + tail, max_abs_diff(fused, direct),
                 max_abs(direct), 1e-12, seed);
        }

        {
          const PrefillResult pre = prefill(x, w, cfg);
          KVCacheState cache = make_cache(cfg);
          double err = 0.0;
          for (std::size_t t = 0; t < n; ++t) {
            const DecodeStepResult step = decode_step(row_of(x, t), cache, w, cfg);
            err = std::max(err, max_abs_diff(step.output, row_of(pre.outputs, t)));
          }
          record("replay/" + label + tail, err, max_abs(pre.outputs), 1e-10, seed);
        }

        if (n >= 2) {
          Matrix x2 = x;
          for (std::size_t h = 0; h < cfg.hidden_dim; ++h) x2(n - 1, h) += 1.0 + double(h);
          const Matrix full = forward(x2, w, cfg);
          const Matrix base = forward(x, w, cfg);
          double err = 0.0;
          for (std::size_t t = 0; t + 1 < n; ++t)
            err = std::max(err, max_abs_diff(row_of(full, t), row_of(base, t)));
          record("causality/" + label + tail, err, max_abs(base), 0.0, seed);
        }
      }
    }
  }
  std::sort(reports.begin(), reports.end(),
            [](const OracleReport& a, const OracleReport& b) {
              return a.case_name < b.case_name;
            });
  return reports;
}

inline bool all_passed(const std::vector<OracleReport>& reports) {
  for (const OracleReport& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace oracle
}  // namespace gtalab
