#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isml/error.hpp"
#include "isml/prediction_data.hpp"

namespace isml {

/// Distinct prediction columns with nonnegative weights. A matrix collapses
/// to its observed columns weighted by counts; a population model can be
/// represented as all 2^m patterns weighted by their probabilities.
class PatternTable {
 public:
  explicit PatternTable(std::size_t m) : m_(m) {}

  static PatternTable from_matrix(const PredictionMatrix& z) {
    std::map<std::string, std::size_t> counts;
    std::string key(z.m(), '\0');
    for (std::size_t j = 0; j < z.n(); ++j) {
      for (std::size_t i = 0; i < z.m(); ++i) key[i] = static_cast<char>(z(i, j));
      ++counts[key];
    }
    PatternTable table(z.m());
    table.labels_.reserve(counts.size() * z.m());
    for (const auto& [k, count] : counts) {
      for (char c : k) table.labels_.push_back(static_cast<Label>(c));
      table.weights_.push_back(static_cast<double>(count));
    }
    return table;
  }

  /// All 2^m patterns; bit i of the pattern index set means f_i = +1.
  template <typename WeightFn>
  static PatternTable enumerate(std::size_t m, WeightFn&& weight) {
    if (m >= 31) throw Error(ErrorCode::InvalidArgument, "pattern enumeration limited to m < 31");
    PatternTable table(m);
    std::vector<Label> f(m);
    for (std::size_t code = 0; code < (std::size_t{1} << m); ++code) {
      for (std::size_t i = 0; i < m; ++i) f[i] = (code >> i) & 1U ? Label{1} : Label{-1};
      table.add(f, weight(std::span<const Label>(f)));
    }
    return table;
  }

  void add(std::span<const Label> pattern, double weight) {
    if (pattern.size() != m_) throw Error(ErrorCode::InvalidArgument, "pattern length mismatch");
    labels_.insert(labels_.end(), pattern.begin(), pattern.end());
    weights_.push_back(weight);
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const Label> pattern(std::size_t p) const noexcept {
    return {labels_.data() + p * m_, m_};
  }
  double weight(std::size_t p) const noexcept { return weights_[p]; }
  double total_weight() const noexcept {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  std::size_t m_;
  std::vector<Label> labels_;
  std::vector<double> weights_;
};

inline double log_sum_exp(double a, double b) noexcept {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

/// Log-space evaluation of the two-component product-Bernoulli mixture
///   Pr(f) = (1+b)/2 prod psi^[f=+1] (1-psi)^[f=-1] + (1-b)/2 prod eta^[f=-1] (1-eta)^[f=+1].
class MixtureLogs {
 public:
  MixtureLogs(std::span<const double> psi, std::span<const double> eta, double b)
      : log_pos_prior_(std::log(0.5 * (1.0 + b))), log_neg_prior_(std::log(0.5 * (1.0 - b))) {
    const std::size_t m = psi.size();
    pos_plus_.resize(m);
    pos_minus_.resize(m);
    neg_plus_.resize(m);
    neg_minus_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      pos_plus_[i] = std::log(psi[i]);
      pos_minus_[i] = std::log1p(-psi[i]);
      neg_minus_[i] = std::log(eta[i]);
      neg_plus_[i] = std::log1p(-eta[i]);
    }
  }

  /// (log joint with y=+1, log joint with y=-1).
  std::pair<double, double> components(std::span<const Label> f) const noexcept {
    double pos = log_pos_prior_;
    double neg = log_neg_prior_;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] > 0) {
        pos += pos_plus_[i];
        neg += neg_plus_[i];
      } else {
        pos += pos_minus_[i];
        neg += neg_minus_[i];
      }
    }
    return {pos, neg};
  }

  double log_prob(std::span<const Label> f) const noexcept {
    const auto [pos, neg] = components(f);
    return log_sum_exp(pos, neg);
  }

 private:
  double log_pos_prior_;
  double log_neg_prior_;
  std::vector<double> pos_plus_, pos_minus_, neg_plus_, neg_minus_;
};

/// Weighted mean of log Pr(pattern) under the mixture.
inline double mean_log_likelihood(const PatternTable& table, std::span<const double> psi,
                                  std::span<const double> eta, double b) {
  const MixtureLogs model(psi, eta, b);
  double acc = 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < table.size(); ++p) {
    const double w = table.weight(p);
    if (w == 0.0) continue;
    acc += w * model.log_prob(table.pattern(p));
    total += w;
  }
  return total > 0.0 ? acc / total : 0.0;
}

}  // namespace isml
