#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "isml/accuracies.hpp"
#include "isml/error.hpp"
#include "isml/patterns.hpp"
#include "isml/prediction_data.hpp"

namespace isml {

/// labels[j] = +1 iff scores[j] >= 0.
struct EnsemblePrediction {
  std::vector<Label> labels;
  std::vector<double> scores;
};

constexpr Label sign_label(double score) noexcept { return score >= 0.0 ? Label{1} : Label{-1}; }

namespace detail {

template <typename WeightFn>
EnsemblePrediction linear_rule(const PredictionMatrix& z, WeightFn&& weight, double offset) {
  EnsemblePrediction out;
  out.scores.assign(z.n(), offset);
  for (std::size_t i = 0; i < z.m(); ++i) {
    const double w = weight(i);
    const auto row = z.row(i);
    for (std::size_t j = 0; j < z.n(); ++j) out.scores[j] += w * row[j];
  }
  out.labels.resize(z.n());
  for (std::size_t j = 0; j < z.n(); ++j) out.labels[j] = sign_label(out.scores[j]);
  return out;
}

}  // namespace detail

inline EnsemblePrediction majority_vote(const PredictionMatrix& z) {
  return detail::linear_rule(
      z, [](std::size_t) { return 1.0; }, 0.0);
}

/// Spectral meta-learner: sign(sum_i f_i v_i).
inline EnsemblePrediction sml_predict(const PredictionMatrix& z, std::span<const double> v) {
  if (v.size() != z.m()) throw Error(ErrorCode::InvalidArgument, "weight vector length != m");
  return detail::linear_rule(
      z, [&](std::size_t i) { return v[i]; }, 0.0);
}

/// Maximum-likelihood label under known (or estimated) accuracies:
/// score = sum_i f_i ln(alpha_i) + ln(beta_i) with
/// alpha_i = psi eta / ((1-psi)(1-eta)), beta_i = psi(1-psi) / (eta(1-eta)).
/// With unsupervised plug-in accuracies this is i-SML; with true
/// accuracies it is the oracle ML rule.
inline EnsemblePrediction ml_predict(const PredictionMatrix& z, const AccuracyEstimates& acc) {
  if (acc.size() != z.m()) throw Error(ErrorCode::InvalidArgument, "accuracy vector length != m");
  std::vector<double> log_alpha(z.m());
  double offset = 0.0;
  for (std::size_t i = 0; i < z.m(); ++i) {
    const double p = acc.psi[i];
    const double e = acc.eta[i];
    if (!(p > 0.0 && p < 1.0 && e > 0.0 && e < 1.0)) {
      throw Error(ErrorCode::UnclippedAccuracies,
                  "ML rule needs psi and eta strictly inside (0,1); clip them first");
    }
    log_alpha[i] = std::log(p) + std::log(e) - std::log1p(-p) - std::log1p(-e);
    offset += std::log(p) + std::log1p(-p) - std::log(e) - std::log1p(-e);
  }
  return detail::linear_rule(
      z, [&](std::size_t i) { return log_alpha[i]; }, offset);
}

/// Half the sum of true-positive and true-negative rates.
inline double balanced_accuracy_score(std::span<const Label> pred, std::span<const Label> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
  std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] > 0) {
      ++pos;
      tp += pred[j] > 0;
    } else {
      ++neg;
      tn += pred[j] < 0;
    }
  }
  if (pos == 0 || neg == 0) {
    throw Error(ErrorCode::OneClassOnly, "balanced accuracy needs both classes in the truth vector");
  }
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                static_cast<double>(tn) / static_cast<double>(neg));
}

struct EmOptions {
  std::size_t max_iter = 500;
  double tol = 1e-8;
  double eps = 1e-3;
};

struct EmResult {
  AccuracyEstimates acc;
  double b = 0.0;
  std::size_t iterations = 0;
  std::vector<double> log_likelihood_trace;  // mean per-instance log-likelihood
};

/// Two-class Dawid-Skene EM started from `init`. Each M-step maximizes the
/// expected complete log-likelihood over the box [eps, 1-eps], which keeps
/// the likelihood trace monotone.
inline EmResult em_refine(const PredictionMatrix& z, const AccuracyEstimates& init,
                          const EmOptions& opts = {}) {
  if (opts.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  if (init.size() != z.m()) throw Error(ErrorCode::InvalidArgument, "accuracy vector length != m");
  const std::size_t m = z.m();
  const auto table = PatternTable::from_matrix(z);
  const double lo = opts.eps;
  const double hi = 1.0 - opts.eps;

  std::vector<double> psi(m), eta(m);
  for (std::size_t i = 0; i < m; ++i) {
    psi[i] = std::clamp(init.psi[i], lo, hi);
    eta[i] = std::clamp(init.eta[i], lo, hi);
  }
  double b = std::clamp(init.b, -hi, hi);

  EmResult result;
  result.log_likelihood_trace.push_back(mean_log_likelihood(table, psi, eta, b));

  std::vector<double> pos_hits(m), neg_hits(m);
  for (result.iterations = 1; result.iterations <= opts.max_iter; ++result.iterations) {
    // E-step: posterior of y = +1 for each distinct pattern.
    const MixtureLogs model(psi, eta, b);
    double q_total = 0.0, w_total = 0.0;
    std::fill(pos_hits.begin(), pos_hits.end(), 0.0);
    std::fill(neg_hits.begin(), neg_hits.end(), 0.0);
    for (std::size_t p = 0; p < table.size(); ++p) {
      const auto f = table.pattern(p);
      const double w = table.weight(p);
      const auto [lp, ln] = model.components(f);
      const double q = 1.0 / (1.0 + std::exp(ln - lp));
      q_total += w * q;
      w_total += w;
      for (std::size_t i = 0; i < m; ++i) {
        if (f[i] > 0) {
          pos_hits[i] += w * q;
        } else {
          neg_hits[i] += w * (1.0 - q);
        }
      }
    }
    // M-step.
    const double neg_total = w_total - q_total;
    b = std::clamp(2.0 * q_total / w_total - 1.0, -hi, hi);
    for (std::size_t i = 0; i < m; ++i) {
      if (q_total > 0.0) psi[i] = std::clamp(pos_hits[i] / q_total, lo, hi);
      if (neg_total > 0.0) eta[i] = std::clamp(neg_hits[i] / neg_total, lo, hi);
    }

    const double ll = mean_log_likelihood(table, psi, eta, b);
    const double gain = ll - result.log_likelihood_trace.back();
    result.log_likelihood_trace.push_back(ll);
    if (gain < opts.tol) break;
  }
  result.iterations = std::min(result.iterations, opts.max_iter);
  result.acc = make_accuracies(psi, eta, b);
  result.b = b;
  return result;
}

}  // namespace isml
