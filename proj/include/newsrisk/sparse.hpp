#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace newsrisk {

/// Sparse row vector: strictly increasing indices, parallel values.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  double dot(std::span<const double> dense) const {
    double s = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) s += values[i] * dense[indices[i]];
    return s;
  }

  /// Scales to unit L2 norm; the zero vector is left unchanged.
  void normalize() {
    const double n = norm();
    if (n > 0.0) {
      for (double& v : values) v /= n;
    }
  }

  static SparseVector from_dense(std::span<const double> dense) {
    SparseVector out;
    out.dim = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] != 0.0) {
        out.indices.push_back(static_cast<std::uint32_t>(i));
        out.values.push_back(dense[i]);
      }
    }
    return out;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Dot product of two sparse vectors by merge.
inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      s += a.values[i++] * b.values[j++];
    }
  }
  return s;
}

}  // namespace newsrisk
