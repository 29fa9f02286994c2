#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isml/error.hpp"
#include "isml/imbalance.hpp"
#include "isml/moments.hpp"
#include "isml/pipeline.hpp"
#include "isml/prediction_data.hpp"

namespace isml {

// Classes are labelled 1..K throughout the public API.

/// f^A = +1 when the original label is in A, -1 otherwise.
inline PredictionMatrix binarize(const MultiPredictionMatrix& zm, std::span<const int> subset) {
  const int k = zm.num_classes();
  std::vector<bool> member(static_cast<std::size_t>(k) + 1, false);
  for (int c : subset) {
    if (c < 1 || c > k) throw Error(ErrorCode::BadSubset, "class " + std::to_string(c) + " outside [1,K]");
    member[static_cast<std::size_t>(c)] = true;
  }
  const auto size = std::count(member.begin() + 1, member.end(), true);
  if (size == 0 || size == k) {
    throw Error(ErrorCode::BadSubset, "subset must be a nonempty proper subset of the classes");
  }
  std::vector<Label> entries;
  entries.reserve(zm.data().size());
  for (int x : zm.data()) entries.push_back(member[static_cast<std::size_t>(x)] ? Label{1} : Label{-1});
  return PredictionMatrix(zm.m(), zm.n(), std::move(entries));
}

/// K x K column-stochastic matrix: entry (r, c) = Pr(f = r | Y = c).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes, double fill = 0.0)
      : k_(num_classes), data_(static_cast<std::size_t>(num_classes * num_classes), fill) {}

  static ConfusionMatrix identity(int num_classes) {
    ConfusionMatrix c(num_classes);
    for (int r = 1; r <= num_classes; ++r) c.at(r, r) = 1.0;
    return c;
  }

  int num_classes() const noexcept { return k_; }
  double operator()(int predicted, int truth) const noexcept { return data_[offset(predicted, truth)]; }
  double& at(int predicted, int truth) noexcept { return data_[offset(predicted, truth)]; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t offset(int r, int c) const noexcept {
    return static_cast<std::size_t>((r - 1) * k_ + (c - 1));
  }
  int k_ = 0;
  std::vector<double> data_;
};

struct ConfusionSet {
  int num_classes = 0;
  std::vector<ConfusionMatrix> matrices;

  void check(double tol = 1e-9) const {
    for (const auto& c : matrices) {
      if (c.num_classes() != num_classes) throw Error(ErrorCode::InvalidArgument, "matrix size != K");
      for (int col = 1; col <= num_classes; ++col) {
        double sum = 0.0;
        for (int row = 1; row <= num_classes; ++row) {
          const double x = c(row, col);
          if (x < -tol || x > 1.0 + tol) throw Error(ErrorCode::InvalidArgument, "confusion entry outside [0,1]");
          sum += x;
        }
        if (std::abs(sum - 1.0) > tol) throw Error(ErrorCode::InvalidArgument, "confusion column does not sum to 1");
      }
    }
  }
};

inline double max_abs_difference(const ConfusionSet& a, const ConfusionSet& b) {
  if (a.num_classes != b.num_classes || a.matrices.size() != b.matrices.size()) {
    throw Error(ErrorCode::InvalidArgument, "confusion sets have different shapes");
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < a.matrices.size(); ++i) {
    for (int r = 1; r <= a.num_classes; ++r) {
      for (int c = 1; c <= a.num_classes; ++c) {
        diff = std::max(diff, std::abs(a.matrices[i](r, c) - b.matrices[i](r, c)));
      }
    }
  }
  return diff;
}

/// Exact mean, covariance and third-moment tensor of the binarized
/// classifiers f^A under conditionally independent multiclass errors.
inline MomentSet population_binary_moments(const ConfusionSet& confusions,
                                           std::span<const double> priors,
                                           std::span<const int> subset) {
  const int k = confusions.num_classes;
  if (priors.size() != static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::InvalidArgument, "prior vector length != K");
  }
  double total = 0.0;
  for (double p : priors) {
    if (p < 0.0) throw Error(ErrorCode::ParamOutOfRange, "negative class prior");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::ParamOutOfRange, "priors do not sum to 1");

  std::vector<bool> member(static_cast<std::size_t>(k) + 1, false);
  for (int c : subset) {
    if (c < 1 || c > k) throw Error(ErrorCode::BadSubset, "class outside [1,K]");
    member[static_cast<std::size_t>(c)] = true;
  }

  const std::size_t m = confusions.matrices.size();
  // cond[i][y-1] = E[f_i^A | Y = y]
  std::vector<std::vector<double>> cond(m, std::vector<double>(static_cast<std::size_t>(k)));
  std::vector<double> mu(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (int y = 1; y <= k; ++y) {
      double in = 0.0;
      for (int r = 1; r <= k; ++r) {
        if (member[static_cast<std::size_t>(r)]) in += confusions.matrices[i](r, y);
      }
      cond[i][static_cast<std::size_t>(y - 1)] = 2.0 * in - 1.0;
      mu[i] += priors[static_cast<std::size_t>(y - 1)] * (2.0 * in - 1.0);
    }
  }

  MomentSet out{mu, SymmetricMatrix(m), TripleTensor(m), 0};
  for (std::size_t i = 0; i < m; ++i) {
    out.cov.set(i, i, 1.0 - mu[i] * mu[i]);
    for (std::size_t j = i + 1; j < m; ++j) {
      double c = 0.0;
      for (std::size_t y = 0; y < priors.size(); ++y) {
        c += priors[y] * (cond[i][y] - mu[i]) * (cond[j][y] - mu[j]);
      }
      out.cov.set(i, j, c);
      for (std::size_t l = j + 1; l < m; ++l) {
        double t = 0.0;
        for (std::size_t y = 0; y < priors.size(); ++y) {
          t += priors[y] * (cond[i][y] - mu[i]) * (cond[j][y] - mu[j]) * (cond[l][y] - mu[l]);
        }
        out.tensor.at(i, j, l) = t;
      }
    }
  }
  return out;
}

struct BinaryStats {
  std::vector<double> mu;
  SymmetricMatrix cov;
};

inline BinaryStats population_binary_stats(const ConfusionSet& confusions,
                                           std::span<const double> priors,
                                           std::span<const int> subset) {
  auto moments = population_binary_moments(confusions, priors, subset);
  return {std::move(moments.mu), std::move(moments.cov)};
}

/// Perturbs classifier 1's confusion matrix along the six-entry cycle
///   (j,k)+d, (k,j)-d, (l,j)+d, (j,l)-d, (k,l)+d, (l,k)-d,
/// which keeps every row and column sum, so first and second moments of
/// every binary reduction stay the same under equal class priors.
inline ConfusionSet ambiguity_witness(const ConfusionSet& base, int j, int k, int l, double delta) {
  const int num = base.num_classes;
  auto valid = [num](int c) { return c >= 1 && c <= num; };
  if (!valid(j) || !valid(k) || !valid(l) || j == k || k == l || j == l) {
    throw Error(ErrorCode::InvalidArgument, "witness classes must be three distinct labels in [1,K]");
  }
  if (base.matrices.empty()) throw Error(ErrorCode::InvalidArgument, "empty confusion set");

  ConfusionSet out = base;
  ConfusionMatrix& c = out.matrices.front();
  const struct {
    int r, col;
    double sign;
  } moves[] = {{j, k, +1}, {k, j, -1}, {l, j, +1}, {j, l, -1}, {k, l, +1}, {l, k, -1}};
  for (const auto& mv : moves) {
    const double updated = c(mv.r, mv.col) + mv.sign * delta;
    if (updated < 0.0 || updated > 1.0) {
      throw Error(ErrorCode::PerturbationOutOfRange,
                  "perturbed entry (" + std::to_string(mv.r) + "," + std::to_string(mv.col) +
                      ") would leave [0,1]");
    }
    c.at(mv.r, mv.col) = updated;
  }
  return out;
}

struct ClassStatus {
  bool ok = true;
  std::optional<ErrorCode> error;
  std::string message;
};

/// One-vs-all estimates. p is the raw per-class estimate; p_normalized
/// rescales the successful classes to sum to one. diag[i][k-1] estimates
/// Pr(f_i = k | Y = k). Failed classes hold NaN.
struct MulticlassEstimates {
  std::vector<double> p;
  std::vector<double> p_normalized;
  std::vector<std::vector<double>> diag;
  ImbalanceMethod method = ImbalanceMethod::tensor;
  std::vector<ClassStatus> status;
};

namespace detail {

inline MulticlassEstimates make_multiclass(std::size_t m, int k, ImbalanceMethod method) {
  MulticlassEstimates est;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  est.p.assign(static_cast<std::size_t>(k), nan);
  est.diag.assign(m, std::vector<double>(static_cast<std::size_t>(k), nan));
  est.method = method;
  est.status.resize(static_cast<std::size_t>(k));
  return est;
}

inline void normalize_probs(MulticlassEstimates& est) {
  double total = 0.0;
  for (std::size_t c = 0; c < est.p.size(); ++c) {
    if (est.status[c].ok) total += est.p[c];
  }
  est.p_normalized = est.p;
  if (total > 0.0) {
    for (std::size_t c = 0; c < est.p.size(); ++c) {
      if (est.status[c].ok) est.p_normalized[c] /= total;
    }
  }
}

}  // namespace detail

inline MulticlassEstimates estimate_probs_and_diagonals(const MultiPredictionMatrix& zm,
                                                        ImbalanceMethod method,
                                                        const ImbalanceOptions& opts = {}) {
  const int k = zm.num_classes();
  auto est = detail::make_multiclass(zm.m(), k, method);
  for (int c = 1; c <= k; ++c) {
    const auto slot = static_cast<std::size_t>(c - 1);
    try {
      const int subset[] = {c};
      const auto report = estimate_accuracies(binarize(zm, subset), method, opts);
      est.p[slot] = 0.5 * (1.0 + report.imbalance.b);
      for (std::size_t i = 0; i < zm.m(); ++i) est.diag[i][slot] = report.acc.psi[i];
    } catch (const Error& e) {
      est.status[slot] = {false, e.code(), e.what()};
    }
  }
  detail::normalize_probs(est);
  return est;
}

/// Tensor-route estimates from per-class moments (index c-1 holds the
/// moments of the {c}-vs-rest reduction).
inline MulticlassEstimates estimate_probs_and_diagonals(std::span<const MomentSet> per_class,
                                                        const ImbalanceOptions& opts = {}) {
  const int k = static_cast<int>(per_class.size());
  const std::size_t m = per_class.empty() ? 0 : per_class.front().mu.size();
  auto est = detail::make_multiclass(m, k, ImbalanceMethod::tensor);
  for (std::size_t slot = 0; slot < per_class.size(); ++slot) {
    try {
      const auto imbalance = estimate_b_tensor(per_class[slot], opts.delta, opts.spectral);
      const auto acc = clip_accuracies(
          psi_eta_from_b(per_class[slot].mu, imbalance.spectral.v, imbalance.b), opts.eps);
      est.p[slot] = 0.5 * (1.0 + imbalance.b);
      for (std::size_t i = 0; i < m; ++i) est.diag[i][slot] = acc.psi[i];
    } catch (const Error& e) {
      est.status[slot] = {false, e.code(), e.what()};
    }
  }
  detail::normalize_probs(est);
  return est;
}

}  // namespace isml
