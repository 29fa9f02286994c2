#pragma once

#include <vector>

#include "isml/accuracies.hpp"
#include "isml/ensemble.hpp"
#include "isml/imbalance.hpp"
#include "isml/moments.hpp"
#include "isml/patterns.hpp"
#include "isml/prediction_data.hpp"
#include "isml/spectral.hpp"

namespace isml {

/// End-to-end unsupervised estimate: imbalance by one route, then
/// sensitivities/specificities by plug-in, clipped into [eps, 1-eps].
struct AccuracyReport {
  ImbalanceEstimate imbalance;
  AccuracyEstimates acc;
  std::vector<double> mu;
};

inline AccuracyReport estimate_accuracies(const PredictionMatrix& z, ImbalanceMethod method,
                                          const ImbalanceOptions& opts = {}) {
  AccuracyReport report;
  report.mu = sample_means(z);
  if (method == ImbalanceMethod::tensor) {
    report.imbalance = estimate_b_tensor(z, opts.delta, opts.spectral);
  } else {
    const auto spectral = estimate_v(sample_covariance(z), opts.spectral);
    report.imbalance =
        estimate_b_likelihood(PatternTable::from_matrix(z), report.mu, spectral, opts);
  }
  report.acc = clip_accuracies(
      psi_eta_from_b(report.mu, report.imbalance.spectral.v, report.imbalance.b), opts.eps);
  return report;
}

/// i-SML labels: the ML rule fed with the unsupervised accuracy estimates.
inline EnsemblePrediction isml_predict(const PredictionMatrix& z, ImbalanceMethod method,
                                       const ImbalanceOptions& opts = {}) {
  return ml_predict(z, estimate_accuracies(z, method, opts).acc);
}

}  // namespace isml
