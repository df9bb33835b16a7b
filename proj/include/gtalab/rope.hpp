// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gtalab/matrix.hpp"

namespace gtalab {

// Rotary position encoding over adjacent column pairs (2k, 2k+1).
struct RopeParams {
  std::size_t head_dim = 0;     // width of one rotated slice; must be even
  double theta_base = 10000.0;  // frequency base

  void validate() const {
    if (head_dim == 0 || head_dim % 2 != 0)
      throw std::invalid_argument("rope: head_dim must be positive and even");
    if (!(theta_base > 1.0))
      throw std::invalid_argument("rope: theta_base must exceed 1");
  }
};

inline std::vector<std::size_t> iota_positions(std::size_t n, std::size_t start = 0) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = start + i;
  return p;
}

// Rotates each pair (x[2k], x[2k+1]) by angle pos * theta_base^(-2k/head_dim).
// `inverse` applies the opposite rotation; it is the exact adjoint used by the
// backward pass.
inline Matrix apply_rope(const Matrix& x, const std::vector<std::size_t>& positions,
                         const RopeParams& p, bool inverse = false) {
  p.validate();
  if (x.cols != p.head_dim)
    throw std::invalid_argument("apply_rope: input " + shape_str(x) + " vs head_dim " +
                                std::to_string(p.head_dim));
  if (positions.size() != x.rows)
    throw std::invalid_argument("apply_rope: " + std::to_string(positions.size()) +
                                " positions for " + std::to_string(x.rows) + " rows");
  Matrix out = x;
  const std::size_t half = p.head_dim / 2;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double pos = static_cast<double>(positions[r]);
    for (std::size_t k = 0; k < half; ++k) {
      const double freq = std::pow(p.theta_base, -2.0 * static_cast<double>(k) /
                                                     static_cast<double>(p.head_dim));
      const double angle = pos * freq;
      const double c = std::cos(angle);
      const double s = inverse ? -std::sin(angle) : std::sin(angle);
      const double a = x(r, 2 * k);
      const double b = x(r, 2 * k + 1);
      out(r, 2 * k) = a * c - b * s;
      out(r, 2 * k + 1) = a * s + b * c;
    }
  }
  return out;
}

// Applies apply_rope independently to each head_dim-wide column slice.
// Used for projections that concatenate several heads or groups.
inline Matrix apply_rope_sliced(const Matrix& x, const std::vector<std::size_t>& positions,
                                const RopeParams& p, bool inverse = false) {
  p.validate();
  if (x.cols % p.head_dim != 0)
    throw std::invalid_argument("apply_rope_sliced: " + shape_str(x) +
                                " not a multiple of head_dim " + std::to_string(p.head_dim));
  Matrix out(x.rows, x.cols);
  for (std::size_t c0 = 0; c0 < x.cols; c0 += p.head_dim)
    paste_col_block(out, c0, apply_rope(col_block(x, c0, p.head_dim), positions, p, inverse));
  return out;
}

}  // namespace gtalab
