#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "isml/error.hpp"

namespace isml {

/// Per-classifier sensitivity (psi), specificity (eta) and balanced
/// accuracy (pi) together with the class imbalance they were derived from.
/// raw_psi / raw_eta keep the unclipped plug-in values for diagnostics.
struct AccuracyEstimates {
  std::vector<double> psi;
  std::vector<double> eta;
  std::vector<double> pi;
  std::vector<double> raw_psi;
  std::vector<double> raw_eta;
  std::vector<bool> psi_clipped;
  std::vector<bool> eta_clipped;
  double b = 0.0;

  std::size_t size() const noexcept { return psi.size(); }
  /// Half the sensitivity/specificity gap.
  double delta(std::size_t i) const { return psi[i] - pi[i]; }
  bool clipped(std::size_t i) const { return psi_clipped[i] || eta_clipped[i]; }
};

/// Accuracies from known values (ground truth, or an EM iterate).
inline AccuracyEstimates make_accuracies(std::vector<double> psi, std::vector<double> eta,
                                         double b) {
  if (psi.size() != eta.size()) throw Error(ErrorCode::InvalidArgument, "psi/eta length mismatch");
  AccuracyEstimates acc;
  acc.pi.resize(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) acc.pi[i] = 0.5 * (psi[i] + eta[i]);
  acc.raw_psi = psi;
  acc.raw_eta = eta;
  acc.psi = std::move(psi);
  acc.eta = std::move(eta);
  acc.psi_clipped.assign(acc.psi.size(), false);
  acc.eta_clipped.assign(acc.psi.size(), false);
  acc.b = b;
  return acc;
}

/// psi = (1 + mu + v sqrt((1-b)/(1+b))) / 2, eta = (1 - mu + v sqrt((1+b)/(1-b))) / 2.
/// Values are left unclipped.
inline AccuracyEstimates psi_eta_from_b(std::span<const double> mu, std::span<const double> v,
                                        double b) {
  if (mu.size() != v.size()) throw Error(ErrorCode::InvalidArgument, "mu/v length mismatch");
  if (!(std::abs(b) < 1.0)) throw Error(ErrorCode::BOutOfRange, "class imbalance must satisfy |b| < 1");
  const double up = std::sqrt((1.0 - b) / (1.0 + b));
  const double down = std::sqrt((1.0 + b) / (1.0 - b));
  std::vector<double> psi(mu.size()), eta(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    psi[i] = 0.5 * (1.0 + mu[i] + v[i] * up);
    eta[i] = 0.5 * (1.0 - mu[i] + v[i] * down);
  }
  return make_accuracies(std::move(psi), std::move(eta), b);
}

inline AccuracyEstimates clip_accuracies(AccuracyEstimates acc, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorCode::ParamOutOfRange, "eps must lie in (0,0.5)");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double p = std::clamp(acc.psi[i], eps, 1.0 - eps);
    const double e = std::clamp(acc.eta[i], eps, 1.0 - eps);
    acc.psi_clipped[i] = acc.psi_clipped[i] || p != acc.psi[i];
    acc.eta_clipped[i] = acc.eta_clipped[i] || e != acc.eta[i];
    acc.psi[i] = p;
    acc.eta[i] = e;
    acc.pi[i] = 0.5 * (p + e);
  }
  return acc;
}

}  // namespace isml
