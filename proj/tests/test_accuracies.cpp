#include <cmath>
#include <random>

#include "isml/accuracies.hpp"
#include "isml/moments.hpp"
#include "isml/pipeline.hpp"
#include "isml/simulation.hpp"
#include "isml/spectral.hpp"
#include "oracles.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("plug-in formulas on hand values") {
  auto acc = isml::psi_eta_from_b(std::vector<double>{0.2}, std::vector<double>{0.4}, 0.0);
  CHECK_THAT(acc.psi[0], WithinAbs(0.8, 1e-15));
  CHECK_THAT(acc.eta[0], WithinAbs(0.6, 1e-15));
  CHECK_THAT(acc.pi[0], WithinAbs(0.7, 1e-15));
  CHECK_FALSE(acc.clipped(0));

  acc = isml::psi_eta_from_b(std::vector<double>{0.5}, std::vector<double>{std::sqrt(0.75) * 0.6}, 0.5);
  CHECK_THAT(acc.psi[0], WithinAbs(0.9, 1e-14));
  CHECK_THAT(acc.eta[0], WithinAbs(0.7, 1e-14));
  CHECK_THAT(acc.delta(0), WithinAbs(0.1, 1e-14));

  acc = isml::psi_eta_from_b(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.0);
  CHECK(acc.psi[0] == 0.5);
  CHECK(acc.eta[0] == 0.5);

  REQUIRE_ISML_ERROR(isml::psi_eta_from_b(std::vector<double>{0.0}, std::vector<double>{0.0}, 1.0),
                     isml::ErrorCode::BOutOfRange);
  REQUIRE_ISML_ERROR(isml::psi_eta_from_b(std::vector<double>{0.0}, std::vector<double>{0.0}, -1.5),
                     isml::ErrorCode::BOutOfRange);
}

TEST_CASE("raw estimates outside [0,1] are preserved until clipping") {
  const auto raw = isml::psi_eta_from_b(std::vector<double>{0.9}, std::vector<double>{0.3}, 0.0);
  CHECK(raw.psi[0] > 1.0);
  const auto clipped = isml::clip_accuracies(raw, 1e-3);
  CHECK(clipped.psi[0] == 0.999);
  CHECK(clipped.raw_psi[0] == raw.psi[0]);
  CHECK(clipped.clipped(0));
  CHECK(clipped.pi[0] == 0.5 * (clipped.psi[0] + clipped.eta[0]));
}

TEST_CASE("clip_accuracies") {
  auto acc = isml::make_accuracies({1.03, 0.8, -0.2}, {0.5, 0.5, 0.5}, 0.1);
  auto c = isml::clip_accuracies(acc, 1e-3);
  CHECK(c.psi[0] == 0.999);
  CHECK(c.psi_clipped[0]);
  CHECK(c.psi[1] == 0.8);
  CHECK_FALSE(c.psi_clipped[1]);
  CHECK(c.psi[2] == 1e-3);
  c = isml::clip_accuracies(acc, 0.01);
  CHECK(c.psi[2] == 0.01);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.pi[i] == 0.5 * (c.psi[i] + c.eta[i]));
  REQUIRE_ISML_ERROR(isml::clip_accuracies(acc, 0.5), isml::ErrorCode::ParamOutOfRange);
  REQUIRE_ISML_ERROR(isml::clip_accuracies(acc, 0.0), isml::ErrorCode::ParamOutOfRange);
}

TEST_CASE("exact inversion of population moments") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 100; ++rep) {
    const auto model = oracle::random_model(gen, 4, 0.01, 0.99, 0.95);
    const auto exact = oracle::enumerate_moments(model);
    std::vector<double> v(4);
    for (std::size_t i = 0; i < 4; ++i) v[i] = std::sqrt(1 - model.b * model.b) * (model.psi[i] + model.eta[i] - 1);
    const auto acc = isml::psi_eta_from_b(exact.mu, v, model.b);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK_THAT(acc.psi[i], WithinAbs(model.psi[i], 1e-12));
      CHECK_THAT(acc.eta[i], WithinAbs(model.eta[i], 1e-12));
    }
  }
}

TEST_CASE("negating outputs and b swaps psi and eta") {
  const auto spec = isml::uniform_accuracy_spec(6, 5000, 0.3, 0.55, 0.85, 12);
  const auto z = isml::generate(spec).z;
  std::vector<isml::Label> flipped(z.data().begin(), z.data().end());
  for (auto& x : flipped) x = static_cast<isml::Label>(-x);
  const isml::PredictionMatrix zn(z.m(), z.n(), flipped);

  const auto mu = isml::sample_means(z);
  const auto mun = isml::sample_means(zn);
  const auto v = isml::estimate_v(isml::sample_covariance(z)).v;
  const auto vn = isml::estimate_v(isml::sample_covariance(zn)).v;
  const auto a = isml::psi_eta_from_b(mu, v, 0.3);
  const auto b = isml::psi_eta_from_b(mun, vn, -0.3);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK_THAT(a.psi[i], WithinAbs(b.eta[i], 1e-10));
    CHECK_THAT(a.eta[i], WithinAbs(b.psi[i], 1e-10));
  }
}

TEST_CASE("accuracy error shrinks like n^-1/2 at known b") {
  const std::vector<std::size_t> ns = {1000, 4000, 16000, 64000};
  std::vector<std::pair<double, double>> points;
  for (std::size_t n : ns) {
    double total = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
      const auto spec = isml::uniform_accuracy_spec(8, n, 0.3, 0.6, 0.85, 500 + static_cast<std::uint64_t>(t));
      const auto z = isml::generate(spec).z;
      const auto acc = isml::psi_eta_from_b(isml::sample_means(z), isml::estimate_v(isml::sample_covariance(z)).v, 0.3);
      double worst = 0.0;
      for (std::size_t i = 0; i < 8; ++i) worst = std::max(worst, std::abs(acc.psi[i] - spec.psi[i]));
      total += worst;
    }
    points.emplace_back(static_cast<double>(n), total / trials);
  }
  const double slope = isml::fit_loglog_slope(points);
  CHECK(slope >= -0.8);
  CHECK(slope <= -0.2);
}
