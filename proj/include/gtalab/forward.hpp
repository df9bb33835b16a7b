// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gtalab/attention.hpp"
#include "gtalab/gta.hpp"
#include "gtalab/mla.hpp"

namespace gtalab {

// Mechanism dispatch used by the cache runtime and the verification suite.
// gta routes to its fused path here; the direct path is the definitional
// reference and stays available under its own name.
inline ForwardTrace forward_trace(const Matrix& x, const WeightSet& w,
                                  const AttentionConfig& cfg) {
  switch (cfg.mechanism) {
    case Mechanism::mha:
    case Mechanism::gqa:
    case Mechanism::gva:
    case Mechanism::gha:
      return grouped_forward_trace(x, w, cfg);
    case Mechanism::gta:
      return gta_forward_fused_trace(x, w, cfg);
    case Mechanism::mla:
      return mla_forward_trace(x, w, cfg);
  }
  throw std::invalid_argument("forward_trace: bad mechanism");
}

inline Matrix forward(const Matrix& x, const WeightSet& w, const AttentionConfig& cfg) {
  return forward_trace(x, w, cfg).output;
}

}  // namespace gtalab
