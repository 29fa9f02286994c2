#include <cmath>
#include <random>

#include "isml/multiclass.hpp"
#include "isml/simulation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using isml::ConfusionMatrix;
using isml::ConfusionSet;
using isml::ErrorCode;

namespace {

ConfusionSet uniform_set(std::size_t m, int k) {
  return {k, std::vector<ConfusionMatrix>(m, ConfusionMatrix(k, 1.0 / k))};
}

ConfusionSet identity_set(std::size_t m, int k) {
  return {k, std::vector<ConfusionMatrix>(m, ConfusionMatrix::identity(k))};
}

// Diagonal `a`, remaining mass spread evenly over the other labels.
ConfusionMatrix symmetric_noise(int k, double a) {
  ConfusionMatrix c(k, (1.0 - a) / (k - 1));
  for (int r = 1; r <= k; ++r) c.at(r, r) = a;
  return c;
}

void check_stats_equal(const ConfusionSet& a, const ConfusionSet& b, const std::vector<double>& priors, double tol) {
  for (const auto& subset : oracle::proper_subsets(a.num_classes)) {
    const auto sa = isml::population_binary_stats(a, priors, subset);
    const auto sb = isml::population_binary_stats(b, priors, subset);
    for (std::size_t i = 0; i < a.matrices.size(); ++i) {
      CHECK_THAT(sa.mu[i], WithinAbs(sb.mu[i], tol));
      for (std::size_t j = 0; j < a.matrices.size(); ++j) CHECK_THAT(sa.cov(i, j), WithinAbs(sb.cov(i, j), tol));
    }
  }
}

}  // namespace

TEST_CASE("binarize") {
  const isml::MultiPredictionMatrix zm(3, 3, 3, {2, 3, 1, 1, 2, 3, 3, 3, 2});
  const int two[] = {2};
  const auto z = isml::binarize(zm, two);
  CHECK(z(0, 0) == 1);
  CHECK(z(0, 1) == -1);
  const int pair[] = {1, 2};
  CHECK(isml::binarize(zm, pair)(0, 0) == 1);
  const int all[] = {1, 2, 3};
  REQUIRE_ISML_ERROR(isml::binarize(zm, all), ErrorCode::BadSubset);
  REQUIRE_ISML_ERROR(isml::binarize(zm, std::span<const int>{}), ErrorCode::BadSubset);
  const int outside[] = {4};
  REQUIRE_ISML_ERROR(isml::binarize(zm, outside), ErrorCode::BadSubset);
}

TEST_CASE("complementary subsets binarize to negations") {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> label(1, 4);
  std::vector<int> entries(5 * 40);
  for (auto& e : entries) e = label(gen);
  const isml::MultiPredictionMatrix zm(5, 40, 4, entries);
  for (const auto& subset : oracle::proper_subsets(4)) {
    std::vector<int> complement;
    for (int c = 1; c <= 4; ++c) {
      if (std::find(subset.begin(), subset.end(), c) == subset.end()) complement.push_back(c);
    }
    const auto a = isml::binarize(zm, subset);
    const auto b = isml::binarize(zm, complement);
    for (std::size_t k = 0; k < a.data().size(); ++k) CHECK(a.data()[k] == -b.data()[k]);
  }
}

TEST_CASE("population binary stats match enumeration") {
  const std::vector<double> priors = {0.45, 0.35, 0.2};
  const auto set = isml::random_confusions(4, 3, 0.5, 0.8, 3);
  for (const auto& subset : oracle::proper_subsets(3)) {
    const auto lib = isml::population_binary_stats(set, priors, subset);
    const auto ref = oracle::enumerate_binary_stats(set, priors, subset);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK_THAT(lib.mu[i], WithinAbs(ref.mu[i], 1e-12));
      for (std::size_t j = 0; j < 4; ++j) {
        // Diagonal holds the +-1 variance 1 - mu^2.
        CHECK_THAT(lib.cov(i, j), WithinAbs(ref.cov[i][j], 1e-12));
      }
    }
  }
}

TEST_CASE("population binary stats hand values") {
  const std::vector<double> equal = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto ident = identity_set(4, 3);
  const int one[] = {1};
  const auto s = isml::population_binary_stats(ident, equal, one);
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(s.mu[i], WithinAbs(-1.0 / 3.0, 1e-15));
  const double b = -1.0 / 3.0;
  const double v = std::sqrt(1 - b * b);  // perfect classifiers: 2 pi - 1 = 1
  CHECK_THAT(s.cov(0, 1), WithinAbs(v * v, 1e-14));
  const int rest[] = {2, 3};
  const auto c = isml::population_binary_stats(ident, equal, rest);
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(c.mu[i], WithinAbs(-s.mu[i], 1e-15));
}

TEST_CASE("ambiguity witness on the uniform model") {
  const auto base = uniform_set(4, 3);
  const auto moved = isml::ambiguity_witness(base, 1, 2, 3, 0.1);
  moved.check();
  CHECK_THAT(isml::max_abs_difference(base, moved), WithinAbs(0.1, 1e-15));
  check_stats_equal(base, moved, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-12);
  CHECK(isml::ambiguity_witness(base, 1, 2, 3, 0.0).matrices == base.matrices);
  REQUIRE_ISML_ERROR(isml::ambiguity_witness(base, 1, 2, 3, 0.5), ErrorCode::PerturbationOutOfRange);
  REQUIRE_ISML_ERROR(isml::ambiguity_witness(base, 1, 1, 3, 0.1), ErrorCode::InvalidArgument);
}

TEST_CASE("ambiguity witness with informative companions") {
  // Companions whose binarized rates depend only on membership keep the
  // cross-covariances with the perturbed classifier unchanged.
  ConfusionSet base{3, {ConfusionMatrix(3, 1.0 / 3), symmetric_noise(3, 0.7), symmetric_noise(3, 0.6), symmetric_noise(3, 0.8)}};
  const auto moved = isml::ambiguity_witness(base, 2, 3, 1, 0.1);
  check_stats_equal(base, moved, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-12);
  for (const auto& subset : oracle::proper_subsets(3)) {
    const auto ref = oracle::enumerate_binary_stats(moved, {1.0 / 3, 1.0 / 3, 1.0 / 3}, subset);
    const auto lib = isml::population_binary_stats(base, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, subset);
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(lib.mu[i], WithinAbs(ref.mu[i], 1e-12));
  }
}

TEST_CASE("generic companions break the witness") {
  ConfusionSet base{3, {ConfusionMatrix(3, 1.0 / 3), isml::random_confusions(1, 3, 0.5, 0.8, 8).matrices[0],
                        symmetric_noise(3, 0.7)}};
  const auto moved = isml::ambiguity_witness(base, 1, 2, 3, 0.1);
  double diff = 0.0;
  for (const auto& subset : oracle::proper_subsets(3)) {
    const auto a = isml::population_binary_stats(base, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, subset);
    const auto b = isml::population_binary_stats(moved, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, subset);
    diff = std::max(diff, std::abs(a.cov(0, 1) - b.cov(0, 1)));
  }
  CHECK(diff > 1e-4);
}

TEST_CASE("perfect classifiers via the moments seam") {
  const int k = 3;
  const auto ident = identity_set(5, k);
  const std::vector<double> equal(3, 1.0 / 3);
  std::vector<isml::MomentSet> per_class;
  for (int c = 1; c <= k; ++c) {
    const int subset[] = {c};
    per_class.push_back(isml::population_binary_moments(ident, equal, subset));
  }
  const auto est = isml::estimate_probs_and_diagonals(per_class);
  for (int c = 0; c < k; ++c) {
    REQUIRE(est.status[static_cast<std::size_t>(c)].ok);
    CHECK_THAT(est.p[static_cast<std::size_t>(c)], WithinAbs(1.0 / 3.0, 1e-9));
    for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(est.diag[i][static_cast<std::size_t>(c)], WithinAbs(1.0 - 1e-3, 1e-9));
  }
  double total = 0.0;
  for (double p : est.p_normalized) total += p;
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));
}

TEST_CASE("K = 2 reduces to the binary pipeline") {
  const auto set = isml::random_confusions(6, 2, 0.6, 0.85, 4);
  const std::vector<double> priors = {0.65, 0.35};
  const auto data = isml::generate_multiclass(set, priors, 20000, 9);
  const auto est = isml::estimate_probs_and_diagonals(data.z, isml::ImbalanceMethod::likelihood);
  const int one[] = {1};
  const auto binary = isml::estimate_b_likelihood(isml::binarize(data.z, one));
  CHECK(est.p[0] == 0.5 * (1.0 + binary.b));
  CHECK_THAT(est.p[0] + est.p[1], WithinAbs(1.0, 0.02));
  CHECK_THAT(est.p[0], WithinAbs(0.65, 0.03));
}

TEST_CASE("symmetric-noise multiclass estimates converge") {
  const std::vector<double> priors = {0.45, 0.35, 0.2};
  const auto set = isml::random_confusions(8, 3, 0.55, 0.8, 21, true);
  std::vector<std::pair<double, double>> points;
  for (std::size_t n : {10000, 40000, 160000}) {
    double total = 0.0;
    const int trials = 6;
    for (int t = 0; t < trials; ++t) {
      const auto data = isml::generate_multiclass(set, priors, n, 100 + static_cast<std::uint64_t>(t));
      const auto est = isml::estimate_probs_and_diagonals(data.z, isml::ImbalanceMethod::tensor);
      double err = 0.0;
      for (int c = 1; c <= 3; ++c) {
        for (std::size_t i = 0; i < 8; ++i) {
          err += std::abs(est.diag[i][static_cast<std::size_t>(c - 1)] - set.matrices[i](c, c));
        }
      }
      total += err / 24.0;
    }
    points.emplace_back(static_cast<double>(n), total / trials);
  }
  const double slope = isml::fit_loglog_slope(points);
  CHECK(slope >= -0.8);
  CHECK(slope <= -0.2);
}

TEST_CASE("per-class failures are collected") {
  // Every classifier predicts uniformly at random: each one-vs-all split is degenerate.
  const auto set = uniform_set(4, 3);
  const auto data = isml::generate_multiclass(set, std::vector<double>{0.3, 0.3, 0.4}, 2000, 1);
  const auto est = isml::estimate_probs_and_diagonals(data.z, isml::ImbalanceMethod::tensor);
  CHECK(est.status.size() == 3);
  for (const auto& s : est.status) {
    if (!s.ok) CHECK(s.error.has_value());
  }
}

TEST_CASE("confusion set validation") {
  ConfusionSet bad{2, {ConfusionMatrix(2, 0.6)}};
  REQUIRE_ISML_ERROR(bad.check(), ErrorCode::InvalidArgument);
  const auto set = isml::random_confusions(3, 4, 0.5, 0.9, 2);
  set.check();
  for (const auto& c : set.matrices) {
    for (int col = 1; col <= 4; ++col) {
      for (int row = 1; row <= 4; ++row) {
        if (row != col) CHECK(c(row, col) < c(col, col));
      }
    }
  }
}
