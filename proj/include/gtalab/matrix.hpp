// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtalab {

// Dense row-major matrix of doubles. The only tensor type in this library;
// everything is small enough that clarity beats blocking or SIMD.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws) {
    Matrix m(rws.size(), rws.size() ? rws.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rws) {
      if (row.size() != m.cols)
        throw std::invalid_argument("from_rows: ragged initializer");
      std::size_t c = 0;
      for (double v : row) m(r, c++) = v;
      ++r;
    }
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: lhs " + shape_str(a) +
                                " incompatible with rhs " + shape_str(b));
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("add: " + shape_str(a) + " vs " + shape_str(b));
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("sub: " + shape_str(a) + " vs " + shape_str(b));
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("hadamard: " + shape_str(a) + " vs " + shape_str(b));
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

inline Matrix scaled(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.data) v *= s;
  return out;
}

inline void accumulate(Matrix& dst, const Matrix& src) {
  if (!dst.same_shape(src))
    throw std::invalid_argument("accumulate: " + shape_str(dst) + " vs " + shape_str(src));
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

// Copy of columns [c0, c0 + width).
inline Matrix col_block(const Matrix& m, std::size_t c0, std::size_t width) {
  if (c0 + width > m.cols)
    throw std::invalid_argument("col_block: [" + std::to_string(c0) + ", " +
                                std::to_string(c0 + width) + ") out of " + shape_str(m));
  Matrix out(m.rows, width);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, c0 + c);
  return out;
}

inline void paste_col_block(Matrix& dst, std::size_t c0, const Matrix& src) {
  if (src.rows != dst.rows || c0 + src.cols > dst.cols)
    throw std::invalid_argument("paste_col_block: " + shape_str(src) + " at col " +
                                std::to_string(c0) + " into " + shape_str(dst));
  for (std::size_t r = 0; r < src.rows; ++r)
    for (std::size_t c = 0; c < src.cols; ++c) dst(r, c0 + c) = src(r, c);
}

inline Matrix row_of(const Matrix& m, std::size_t r) {
  if (r >= m.rows)
    throw std::invalid_argument("row_of: row " + std::to_string(r) + " out of " + shape_str(m));
  Matrix out(1, m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) out(0, c) = m(r, c);
  return out;
}

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows)
    throw std::invalid_argument("hcat: " + shape_str(a) + " vs " + shape_str(b));
  Matrix out(a.rows, a.cols + b.cols);
  paste_col_block(out, 0, a);
  paste_col_block(out, a.cols, b);
  return out;
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double d : m.data) v = std::max(v, std::fabs(d));
  return v;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  double v = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    v = std::max(v, std::fabs(a.data[i] - b.data[i]));
  return v;
}

// Row-wise softmax of scores / scale with max-subtraction. Entries equal to
// -inf act as a mask and contribute exactly zero weight. Each row must keep at
// least one finite entry.
inline Matrix row_softmax(const Matrix& scores, double scale) {
  if (!(scale > 0.0))
    throw std::invalid_argument("row_softmax: scale must be positive");
  Matrix out(scores.rows, scores.cols);
  for (std::size_t r = 0; r < scores.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.cols; ++c)
      mx = std::max(mx, scores(r, c) / scale);
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols; ++c) {
      const double e = std::exp(scores(r, c) / scale - mx);
      out(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < scores.cols; ++c) out(r, c) /= sum;
  }
  return out;
}

// Gate nonlinearities. `one` degenerates the gate to a no-op; the equivalence
// tests lean on it to strip the nonlinearity out of a mechanism.
enum class ActivationKind { sigmoid, silu, relu_squared, one };

inline double activate(ActivationKind k, double z) {
  switch (k) {
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case ActivationKind::silu: return z / (1.0 + std::exp(-z));
    case ActivationKind::relu_squared: return z > 0.0 ? z * z : 0.0;
    case ActivationKind::one: return 1.0;
  }
  throw std::invalid_argument("activate: bad kind");
}

inline double activate_grad(ActivationKind k, double z) {
  switch (k) {
    case ActivationKind::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case ActivationKind::silu: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 + z * (1.0 - s));
    }
    case ActivationKind::relu_squared: return z > 0.0 ? 2.0 * z : 0.0;
    case ActivationKind::one: return 0.0;
  }
  throw std::invalid_argument("activate_grad: bad kind");
}

inline const char* to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::silu: return "silu";
    case ActivationKind::relu_squared: return "relu_squared";
    case ActivationKind::one: return "one";
  }
  return "?";
}

inline ActivationKind parse_activation(const std::string& s) {
  if (s == "sigmoid") return ActivationKind::sigmoid;
  if (s == "silu") return ActivationKind::silu;
  if (s == "relu_squared") return ActivationKind::relu_squared;
  if (s == "one") return ActivationKind::one;
  throw std::invalid_argument("unknown gate activation '" + s +
                              "' (expected sigmoid, silu, relu_squared, or one)");
}

// result[r][c] = v[r][c] * act(gate[r'][c]) where gate is either one row
// (broadcast over all rows of v) or one row per row of v.
inline Matrix elementwise_gate(const Matrix& v, const Matrix& gate, ActivationKind act) {
  if (gate.cols != v.cols || (gate.rows != 1 && gate.rows != v.rows))
    throw std::invalid_argument("elementwise_gate: gate " + shape_str(gate) +
                                " does not broadcast over " + shape_str(v));
  Matrix out = v;
  for (std::size_t r = 0; r < v.rows; ++r) {
    const std::size_t gr = gate.rows == 1 ? 0 : r;
    for (std::size_t c = 0; c < v.cols; ++c)
      out(r, c) = v(r, c) * activate(act, gate(gr, c));
  }
  return out;
}

}  // namespace gtalab
