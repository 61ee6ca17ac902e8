#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace csgnn {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Small and allocation-friendly; the
/// model dimensions here never exceed a few dozen.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) {
    assert(r < rows);
    return data.data() + r * cols;
  }
  const double* row(std::size_t r) const {
    assert(r < rows);
    return data.data() + r * cols;
  }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  void fill(double v) { data.assign(data.size(), v); }

  bool operator==(const Matrix&) const = default;
};

/// Affine map y = W x + b with W stored out_dim x in_dim.
struct Affine {
  Matrix w;
  Vec b;

  Affine() = default;
  Affine(std::size_t out, std::size_t in) : w(out, in), b(out, 0.0) {}

  std::size_t out_dim() const { return w.rows; }
  std::size_t in_dim() const { return w.cols; }

  Vec apply(std::span<const double> x) const {
    assert(x.size() == w.cols);
    Vec y(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* wr = w.row(r);
      double acc = b[r];
      for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
    return y;
  }

  bool operator==(const Affine&) const = default;
};

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

inline void add_into(std::span<double> dst, std::span<const double> src) {
  assert(dst.size() == src.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline void scale(std::span<double> v, double s) {
  for (double& x : v) x *= s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace csgnn
