#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "isml/error.hpp"
#include "isml/linalg.hpp"
#include "isml/prediction_data.hpp"

namespace isml {

/// Off-diagonal entries T_ijk (i, j, k distinct) of a symmetric third-order
/// tensor, stored once per unordered triple in colexicographic order:
/// index(i<j<k) = C(k,3) + C(j,2) + i.
class TripleTensor {
 public:
  TripleTensor() = default;
  explicit TripleTensor(std::size_t dim) : dim_(dim), values_(count(dim), 0.0) {}

  static constexpr std::size_t count(std::size_t dim) noexcept {
    return dim < 3 ? 0 : dim * (dim - 1) * (dim - 2) / 6;
  }

  static std::size_t index(std::size_t i, std::size_t j, std::size_t k) {
    std::array<std::size_t, 3> s{i, j, k};
    std::sort(s.begin(), s.end());
    if (s[0] == s[1] || s[1] == s[2]) {
      throw Error(ErrorCode::InvalidArgument, "tensor indices must be distinct");
    }
    return s[2] * (s[2] - 1) * (s[2] - 2) / 6 + s[1] * (s[1] - 1) / 2 + s[0];
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[index(i, j, k)];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return values_[index(i, j, k)]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Visits every i<j<k in storage order.
  template <typename F>
  void for_each(F&& f) const {
    std::size_t idx = 0;
    for (std::size_t k = 2; k < dim_; ++k) {
      for (std::size_t j = 1; j < k; ++j) {
        for (std::size_t i = 0; i < j; ++i) f(i, j, k, values_[idx++]);
      }
    }
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct MomentSet {
  std::vector<double> mu;
  SymmetricMatrix cov;
  TripleTensor tensor;
  std::size_t n = 0;  // 0 marks exact population moments
};

inline std::vector<double> sample_means(const PredictionMatrix& z) {
  std::vector<double> mu(z.m());
  for (std::size_t i = 0; i < z.m(); ++i) {
    long long sum = 0;
    for (Label x : z.row(i)) sum += x;
    mu[i] = static_cast<double>(sum) / static_cast<double>(z.n());
  }
  return mu;
}

namespace detail {

inline std::vector<std::vector<double>> centered_rows(const PredictionMatrix& z,
                                                      std::span<const double> mu) {
  std::vector<std::vector<double>> c(z.m(), std::vector<double>(z.n()));
  for (std::size_t i = 0; i < z.m(); ++i) {
    const auto row = z.row(i);
    for (std::size_t j = 0; j < z.n(); ++j) c[i][j] = row[j] - mu[i];
  }
  return c;
}

}  // namespace detail

/// Unbiased sample covariance (1/(n-1) normalization).
inline SymmetricMatrix sample_covariance(const PredictionMatrix& z) {
  if (z.n() < 2) {
    throw Error(ErrorCode::InsufficientSamples, "covariance needs at least two instances");
  }
  const auto mu = sample_means(z);
  const auto c = detail::centered_rows(z, mu);
  const double scale = 1.0 / static_cast<double>(z.n() - 1);
  SymmetricMatrix cov(z.m());
  for (std::size_t i = 0; i < z.m(); ++i) {
    for (std::size_t j = i; j < z.m(); ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < z.n(); ++l) acc += c[i][l] * c[j][l];
      cov.set(i, j, acc * scale);
    }
  }
  return cov;
}

/// Third central co-moments over distinct triples, 1/n normalization.
inline TripleTensor sample_tensor(const PredictionMatrix& z) {
  const auto mu = sample_means(z);
  const auto c = detail::centered_rows(z, mu);
  const std::size_t n = z.n();
  const double scale = 1.0 / static_cast<double>(n);
  TripleTensor t(z.m());
  std::vector<double> pair(n);
  for (std::size_t i = 0; i < z.m(); ++i) {
    for (std::size_t j = i + 1; j < z.m(); ++j) {
      for (std::size_t l = 0; l < n; ++l) pair[l] = c[i][l] * c[j][l];
      for (std::size_t k = j + 1; k < z.m(); ++k) {
        double acc = 0.0;
        for (std::size_t l = 0; l < n; ++l) acc += pair[l] * c[k][l];
        t.at(i, j, k) = acc * scale;
      }
    }
  }
  return t;
}

inline MomentSet compute_moments(const PredictionMatrix& z) {
  return {sample_means(z), sample_covariance(z), sample_tensor(z), z.n()};
}

/// Exact population moments of the two-class conditionally independent
/// model with sensitivities psi, specificities eta and imbalance b.
inline MomentSet population_moments(std::span<const double> psi, std::span<const double> eta,
                                    double b) {
  if (psi.size() != eta.size()) {
    throw Error(ErrorCode::InvalidArgument, "psi and eta lengths differ");
  }
  if (!(b > -1.0 && b < 1.0)) throw Error(ErrorCode::ParamOutOfRange, "b must lie in (-1,1)");
  const std::size_t m = psi.size();
  std::vector<double> mu(m), v(m), s(m);
  const double root = std::sqrt(1.0 - b * b);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(psi[i] > 0.0 && psi[i] < 1.0 && eta[i] > 0.0 && eta[i] < 1.0)) {
      throw Error(ErrorCode::ParamOutOfRange, "psi and eta must lie in (0,1)");
    }
    const double pi = 0.5 * (psi[i] + eta[i]);
    const double delta = 0.5 * (psi[i] - eta[i]);
    s[i] = 2.0 * pi - 1.0;
    mu[i] = 2.0 * delta + b * s[i];
    v[i] = root * s[i];
  }

  MomentSet out{std::move(mu), SymmetricMatrix(m), TripleTensor(m), 0};
  for (std::size_t i = 0; i < m; ++i) {
    out.cov.set(i, i, 1.0 - out.mu[i] * out.mu[i]);
    for (std::size_t j = i + 1; j < m; ++j) out.cov.set(i, j, v[i] * v[j]);
  }
  const double scale = -2.0 * b * (1.0 - b * b);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) out.tensor.at(i, j, k) = scale * s[i] * s[j] * s[k];
    }
  }
  return out;
}

}  // namespace isml
