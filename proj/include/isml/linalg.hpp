#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "isml/error.hpp"

namespace isml {

/// Dense symmetric matrix; writes through set() keep both triangles equal.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim, double fill = 0.0)
      : dim_(dim), data_(dim * dim, fill) {}

  std::size_t dim() const noexcept { return dim_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }

  void set(std::size_t i, std::size_t j, double value) noexcept {
    data_[i * dim_ + j] = value;
    data_[j * dim_ + i] = value;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(dim_);
    for (std::size_t i = 0; i < dim_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  void multiply(std::span<const double> x, std::span<double> out) const noexcept {
    for (std::size_t i = 0; i < dim_; ++i) {
      const double* row = data_.data() + i * dim_;
      double acc = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * x[j];
      out[i] = acc;
    }
  }

  bool operator==(const SymmetricMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Largest algebraic eigenpair by power iteration. The matrix is shifted by
/// its Gershgorin lower bound so that the dominant eigenvalue of the shifted
/// matrix is the algebraically largest one of the original.
inline Eigenpair leading_eigenpair(const SymmetricMatrix& a, std::vector<double> start,
                                   double tol = 1e-12, std::size_t max_iter = 10000) {
  const std::size_t m = a.dim();
  if (start.size() != m) throw Error(ErrorCode::InvalidArgument, "start vector has wrong size");

  double shift = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) off += std::abs(a(i, j));
    }
    shift = std::max(shift, off - a(i, i));
  }

  auto normalize = [](std::vector<double>& x) {
    double norm = 0.0;
    for (double e : x) norm += e * e;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& e : x) e /= norm;
    }
    return norm;
  };

  Eigenpair result;
  std::vector<double> u = std::move(start);
  if (normalize(u) == 0.0) {
    std::fill(u.begin(), u.end(), 1.0);
    normalize(u);
  }
  std::vector<double> w(m);
  for (result.iterations = 1; result.iterations <= max_iter; ++result.iterations) {
    a.multiply(u, w);
    for (std::size_t i = 0; i < m; ++i) w[i] += shift * u[i];
    if (normalize(w) == 0.0) {
      // Shifted matrix annihilates u: the spectrum is identically zero along it.
      result.converged = true;
      break;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) change = std::max(change, std::abs(w[i] - u[i]));
    u.swap(w);
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  result.iterations = std::min(result.iterations, max_iter);

  a.multiply(u, w);
  double rayleigh = 0.0;
  for (std::size_t i = 0; i < m; ++i) rayleigh += u[i] * w[i];
  result.value = rayleigh;
  result.vector = std::move(u);
  return result;
}

}  // namespace isml
