#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace somlp {

// Row-major dense float matrix. Model weights are float32; metric and loss
// accumulation happens in double at the call sites.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, float fill = 0.0f)
      : rows(r), cols(c), values(r * c, fill) {}

  float* row(std::size_t i) { return values.data() + i * cols; }
  const float* row(std::size_t i) const { return values.data() + i * cols; }
  float& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::size_t size() const { return rows * cols; }

  bool operator==(const DenseMatrix&) const = default;
};

inline void matvec_into(const DenseMatrix& m, std::span<const float> v, float* out) {
  if (m.cols != v.size())
    throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(m.cols) +
                                " cols vs vector of length " + std::to_string(v.size()) + ")");
  for (std::size_t i = 0; i < m.rows; ++i) {
    const float* r = m.row(i);
    float acc = 0.0f;
    for (std::size_t j = 0; j < m.cols; ++j) acc += r[j] * v[j];
    out[i] = acc;
  }
}

inline std::vector<float> matvec(const DenseMatrix& m, std::span<const float> v) {
  std::vector<float> out(m.rows);
  matvec_into(m, v, out.data());
  return out;
}

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

inline double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  return std::sqrt(squared_distance(a, b));
}

inline bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace somlp
