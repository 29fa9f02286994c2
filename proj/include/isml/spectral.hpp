#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "isml/error.hpp"
#include "isml/linalg.hpp"

namespace isml {

struct SpectralOptions {
  double tol = 1e-10;  // max-norm change of the completed diagonal
  std::size_t max_iter = 1000;
  double power_tol = 1e-12;
  std::size_t power_max_iter = 10000;
  double degenerate_threshold = 1e-12;
};

/// Rank-one vector fitted to the off-diagonal part of a covariance matrix.
struct SpectralVector {
  std::vector<double> v;
  double residual = 0.0;          // RMS of r_ij - v_i v_j over i<j, final iterate
  double initial_residual = 0.0;  // same, for the first completion step
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // false: NonConvergence warning, v is the last iterate
  bool sign_resolved = false;
};

inline double offdiagonal_residual(const SymmetricMatrix& cov, std::span<const double> v) {
  const std::size_t m = cov.dim();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = cov(i, j) - v[i] * v[j];
      sum += d * d;
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(pairs));
}

/// Flips v so that strictly positive entries are at least as many as
/// strictly negative ones. Ties go to a positive sum, then to a positive
/// largest-magnitude entry (first one on equal magnitudes).
inline SpectralVector resolve_sign(SpectralVector sv) {
  std::size_t pos = 0, neg = 0;
  double sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < sv.v.size(); ++i) {
    const double x = sv.v[i];
    if (x > 0.0) ++pos;
    if (x < 0.0) ++neg;
    sum += x;
    if (std::abs(x) > std::abs(sv.v[largest])) largest = i;
  }
  bool flip = false;
  if (pos != neg) {
    flip = neg > pos;
  } else if (sum != 0.0) {
    flip = sum < 0.0;
  } else if (!sv.v.empty()) {
    flip = sv.v[largest] < 0.0;
  }
  if (flip) {
    for (double& x : sv.v) x = -x;
  }
  sv.sign_resolved = true;
  return sv;
}

/// Rank-one completion of the off-diagonal entries by iterative diagonal
/// replacement; the returned vector carries an arbitrary sign.
inline SpectralVector complete_rank_one(const SymmetricMatrix& cov,
                                        const SpectralOptions& opts = {}) {
  const std::size_t m = cov.dim();
  if (m < 3) throw Error(ErrorCode::TooFewClassifiers, "rank-one completion needs m >= 3");

  SymmetricMatrix work = cov;
  std::vector<double> diag = cov.diagonal();
  std::vector<double> u(m, 1.0);
  std::vector<double> next(m);

  SpectralVector sv;
  Eigenpair pair;
  double change = 0.0;
  for (sv.iterations = 1; sv.iterations <= opts.max_iter; ++sv.iterations) {
    for (std::size_t i = 0; i < m; ++i) work.set(i, i, diag[i]);
    // Warm start from the previous eigenvector; the first pass starts at 1/sqrt(m).
    pair = leading_eigenpair(work, u, opts.power_tol, opts.power_max_iter);
    u = pair.vector;
    if (sv.iterations == 1) {
      std::vector<double> v0(m);
      const double scale = std::sqrt(std::max(pair.value, 0.0));
      for (std::size_t i = 0; i < m; ++i) v0[i] = scale * u[i];
      sv.initial_residual = offdiagonal_residual(cov, v0);
    }
    change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      next[i] = pair.value * u[i] * u[i];
      change = std::max(change, std::abs(next[i] - diag[i]));
    }
    diag.swap(next);
    if (change < opts.tol) {
      sv.converged = true;
      break;
    }
  }
  sv.iterations = std::min(sv.iterations, opts.max_iter);
  if (!sv.converged && change <= 100.0 * opts.tol) sv.converged = true;

  if (!(pair.value > opts.degenerate_threshold)) {
    throw Error(ErrorCode::DegenerateSpectrum,
                "leading eigenvalue of the completed covariance is not positive; "
                "classifiers show no better-than-random structure");
  }
  sv.eigenvalue = pair.value;
  sv.v.resize(m);
  const double scale = std::sqrt(pair.value);
  for (std::size_t i = 0; i < m; ++i) sv.v[i] = scale * u[i];
  sv.residual = offdiagonal_residual(cov, sv.v);
  return sv;
}

inline SpectralVector estimate_v(const SymmetricMatrix& cov, const SpectralOptions& opts = {}) {
  return resolve_sign(complete_rank_one(cov, opts));
}

}  // namespace isml
