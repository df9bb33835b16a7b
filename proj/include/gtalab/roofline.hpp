// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtalab/cost_model.hpp"

namespace gtalab {

// Peak rates for one accelerator. Plain inputs read from a data file; nothing
// here asserts what any real device achieves.
struct HardwareProfile {
  std::string name;
  double peak_flops = 0.0;         // flop/s
  double mem_bandwidth = 0.0;      // byte/s
  double offload_bandwidth = 0.0;  // byte/s for cache traffic in offload mode; 0 = none
  double bytes_per_element = 8.0;  // storage width assumed for weights/cache/activations

  void validate() const {
    if (!(peak_flops > 0.0) || !(mem_bandwidth > 0.0))
      throw std::invalid_argument("hardware profile '" + name +
                                  "': peak_flops and mem_bandwidth must be positive");
    if (offload_bandwidth < 0.0 || !(bytes_per_element > 0.0))
      throw std::invalid_argument("hardware profile '" + name + "': bad field value");
  }
};

enum class BoundKind { compute, memory };

inline const char* to_string(BoundKind b) {
  return b == BoundKind::compute ? "compute" : "memory";
}

struct LatencyEstimate {
  Phase phase = Phase::prefill;
  double compute_s = 0.0;
  double memory_s = 0.0;
  double total_s = 0.0;  // max of the two; the model overlaps perfectly
  BoundKind bound = BoundKind::memory;
};

// Roofline-style estimate for one (preset, hardware, N, batch) point.
// Traffic model: weights stream once per forward pass regardless of batch;
// per-layer cache state moves once per sequence (written in prefill, read in
// decode); activations are approximated as 4 * tokens * hidden * layers
// elements per sequence. Offload mode routes cache traffic over the offload
// link instead of device memory.
inline LatencyEstimate estimate(const ModelPreset& preset, const HardwareProfile& hw,
                                std::uint64_t N, std::uint64_t batch, Phase phase,
                                bool offload = false) {
  hw.validate();
  if (N == 0) throw std::invalid_argument("estimate: N must be at least 1");
  if (batch == 0) throw std::invalid_argument("estimate: batch must be at least 1");
  if (offload && !(hw.offload_bandwidth > 0.0))
    throw std::invalid_argument("estimate: profile '" + hw.name +
                                "' has no offload_bandwidth");

  const ModelCost cost = full_model_cost(preset, N, batch, phase);
  const double flops = static_cast<double>(cost.total());

  const std::uint64_t tokens = phase == Phase::prefill ? N : 1;
  const double bpe = hw.bytes_per_element;
  const double weight_bytes = static_cast<double>(streamed_param_count(preset)) * bpe;
  const double cache_bytes_moved =
      static_cast<double>(cache_formula(preset.attention, N)) *
      static_cast<double>(preset.layers) * static_cast<double>(batch) * bpe;
  const double act_bytes = 4.0 * static_cast<double>(tokens) *
                           static_cast<double>(preset.attention.hidden_dim) *
                           static_cast<double>(preset.layers) *
                           static_cast<double>(batch) * bpe;

  LatencyEstimate e;
  e.phase = phase;
  e.compute_s = flops / hw.peak_flops;
  if (offload)
    e.memory_s = (weight_bytes + act_bytes) / hw.mem_bandwidth +
                 cache_bytes_moved / hw.offload_bandwidth;
  else
    e.memory_s = (weight_bytes + act_bytes + cache_bytes_moved) / hw.mem_bandwidth;
  e.total_s = std::max(e.compute_s, e.memory_s);
  e.bound = e.compute_s > e.memory_s ? BoundKind::compute : BoundKind::memory;
  return e;
}

struct SweepRow {
  std::string preset;
  Phase phase = Phase::prefill;
  std::uint64_t N = 0;
  std::uint64_t batch = 0;
  LatencyEstimate est;
};

// Full grid, ordered preset-major, then N ascending, then batch ascending.
inline std::vector<SweepRow> sweep(const std::vector<ModelPreset>& presets,
                                   const HardwareProfile& hw,
                                   const std::vector<std::uint64_t>& Ns,
                                   const std::vector<std::uint64_t>& batches,
                                   Phase phase, bool offload = false) {
  std::vector<SweepRow> rows;
  rows.reserve(presets.size() * Ns.size() * batches.size());
  for (const ModelPreset& p : presets)
    for (std::uint64_t n : Ns)
      for (std::uint64_t b : batches)
        rows.push_back({p.name, phase, n, b, estimate(p, hw, n, b, phase, offload)});
  return rows;
}

// Locale-proof number rendering for CSV: always '.' as decimal point.
inline std::string format_double(double v, int precision = 9) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(precision) << v;
  return ss.str();
}

inline void sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "preset,phase,N,batch,compute_s,memory_s,total_s,bound\n";
  for (const SweepRow& r : rows) {
    out << r.preset << ',' << to_string(r.phase) << ',' << r.N << ',' << r.batch << ','
        << format_double(r.est.compute_s) << ',' << format_double(r.est.memory_s) << ','
        << format_double(r.est.total_s) << ',' << to_string(r.est.bound) << '\n';
  }
}

}  // namespace gtalab
