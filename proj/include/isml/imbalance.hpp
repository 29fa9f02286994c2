#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "isml/accuracies.hpp"
#include "isml/error.hpp"
#include "isml/moments.hpp"
#include "isml/patterns.hpp"
#include "isml/prediction_data.hpp"
#include "isml/spectral.hpp"

namespace isml {

enum class ImbalanceMethod { tensor, likelihood };

constexpr std::string_view to_string(ImbalanceMethod method) noexcept {
  return method == ImbalanceMethod::tensor ? "tensor" : "likelihood";
}

struct CurvePoint {
  double b;
  double value;
};

struct ImbalanceEstimate {
  double b = 0.0;
  ImbalanceMethod method = ImbalanceMethod::tensor;
  std::optional<double> alpha;                   // tensor path
  std::optional<std::vector<CurvePoint>> curve;  // likelihood path
  double delta = 0.05;
  SpectralVector spectral;  // the v used by either path
};

struct ImbalanceOptions {
  double delta = 0.05;
  double grid_step = 1e-3;
  double eps = 1e-3;
  double refine_width = 1e-6;
  SpectralOptions spectral;
};

inline constexpr double kDegenerateDesignThreshold = 1e-12;

/// Closed-form least squares fit of T_ijk ~ alpha v_i v_j v_k over i<j<k.
inline double alpha_least_squares(const TripleTensor& tensor, std::span<const double> v) {
  if (tensor.dim() != v.size()) throw Error(ErrorCode::InvalidArgument, "tensor/v size mismatch");
  if (v.size() < 3) throw Error(ErrorCode::TooFewClassifiers, "alpha fit needs m >= 3");
  double num = 0.0;
  double den = 0.0;
  tensor.for_each([&](std::size_t i, std::size_t j, std::size_t k, double t) {
    const double p = v[i] * v[j] * v[k];
    num += t * p;
    den += p * p;
  });
  if (!(den > kDegenerateDesignThreshold)) {
    throw Error(ErrorCode::DegenerateDesign,
                "sum of squared v_i v_j v_k is below 1e-12; imbalance is not identifiable "
                "from the third-moment tensor");
  }
  return num / den;
}

/// alpha(b) = -2b / sqrt(1-b^2).
inline double alpha_from_b(double b) { return -2.0 * b / std::sqrt(1.0 - b * b); }

/// Inverse of alpha_from_b; always in (-1, 1).
inline double b_from_alpha(double alpha) { return -alpha / std::sqrt(4.0 + alpha * alpha); }

namespace detail {

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorCode::ParamOutOfRange, "delta must lie in (0,0.5)");
}

inline double clamp_b(double b, double delta) { return std::clamp(b, -1.0 + delta, 1.0 - delta); }

}  // namespace detail

/// Tensor route from precomputed moments (sample or population).
inline ImbalanceEstimate estimate_b_tensor(const MomentSet& moments, double delta = 0.05,
                                           const SpectralOptions& spectral = {}) {
  detail::check_delta(delta);
  ImbalanceEstimate est;
  est.method = ImbalanceMethod::tensor;
  est.delta = delta;
  est.spectral = estimate_v(moments.cov, spectral);
  const double alpha = alpha_least_squares(moments.tensor, est.spectral.v);
  est.alpha = alpha;
  est.b = detail::clamp_b(b_from_alpha(alpha), delta);
  return est;
}

inline ImbalanceEstimate estimate_b_tensor(const PredictionMatrix& z, double delta = 0.05,
                                           const SpectralOptions& spectral = {}) {
  detail::check_delta(delta);
  return estimate_b_tensor(compute_moments(z), delta, spectral);
}

/// Mean restricted log-likelihood G_n(b~): psi, eta follow b~ through the
/// plug-in formulas, clipped into [eps, 1-eps].
inline double restricted_log_likelihood(const PatternTable& table, std::span<const double> mu,
                                        std::span<const double> v, double b_tilde, double eps) {
  const auto acc = clip_accuracies(psi_eta_from_b(mu, v, b_tilde), eps);
  return mean_log_likelihood(table, acc.psi, acc.eta, b_tilde);
}

inline double restricted_log_likelihood(const PredictionMatrix& z, std::span<const double> mu,
                                        std::span<const double> v, double b_tilde, double eps) {
  return restricted_log_likelihood(PatternTable::from_matrix(z), mu, v, b_tilde, eps);
}

/// Grid scan of G_n over [-1+delta, 1-delta] followed by golden-section
/// refinement around the grid maximizer. Grid ties resolve to the smaller b~.
inline ImbalanceEstimate estimate_b_likelihood(const PatternTable& table,
                                               std::span<const double> mu,
                                               const SpectralVector& spectral,
                                               const ImbalanceOptions& opts = {}) {
  detail::check_delta(opts.delta);
  if (!(opts.grid_step > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "grid_step must be positive");
  const std::span<const double> v = spectral.v;
  auto g = [&](double b) { return restricted_log_likelihood(table, mu, v, b, opts.eps); };

  const double lo = -1.0 + opts.delta;
  const double hi = 1.0 - opts.delta;
  const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / opts.grid_step + 1e-9));

  std::vector<CurvePoint> curve;
  curve.reserve(steps + 1);
  std::size_t best = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double b = std::min(lo + static_cast<double>(k) * opts.grid_step, hi);
    curve.push_back({b, g(b)});
    if (curve[k].value > curve[best].value) best = k;
  }

  double left = best > 0 ? curve[best - 1].b : curve[best].b;
  double right = best + 1 < curve.size() ? curve[best + 1].b : curve[best].b;
  double best_b = curve[best].b;
  double best_value = curve[best].value;
  if (right > left) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = right - ratio * (right - left);
    double x2 = left + ratio * (right - left);
    double f1 = g(x1), f2 = g(x2);
    while (right - left > opts.refine_width) {
      if (f1 >= f2) {
        right = x2;
        x2 = x1;
        f2 = f1;
        x1 = right - ratio * (right - left);
        f1 = g(x1);
      } else {
        left = x1;
        x1 = x2;
        f1 = f2;
        x2 = left + ratio * (right - left);
        f2 = g(x2);
      }
    }
    const double mid = 0.5 * (left + right);
    const double f_mid = g(mid);
    if (f_mid > best_value) {
      best_b = mid;
      best_value = f_mid;
    }
  }

  ImbalanceEstimate est;
  est.method = ImbalanceMethod::likelihood;
  est.delta = opts.delta;
  est.b = detail::clamp_b(best_b, opts.delta);
  est.curve = std::move(curve);
  est.spectral = spectral;
  return est;
}

inline ImbalanceEstimate estimate_b_likelihood(const PredictionMatrix& z,
                                               const ImbalanceOptions& opts = {}) {
  detail::check_delta(opts.delta);
  const auto mu = sample_means(z);
  const auto spectral = estimate_v(sample_covariance(z), opts.spectral);
  return estimate_b_likelihood(PatternTable::from_matrix(z), mu, spectral, opts);
}

}  // namespace isml
