#include <cmath>

#include "isml/simulation.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using isml::ErrorCode;
using isml::SyntheticSpec;

TEST_CASE("perfect classifiers reproduce the labels") {
  const SyntheticSpec spec{5, 500, 0.2, std::vector<double>(5, 1.0), std::vector<double>(5, 1.0), 3};
  const auto data = isml::generate(spec);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto row = data.z.row(i);
    CHECK(std::vector<isml::Label>(row.begin(), row.end()) == data.y);
  }
}

TEST_CASE("fair coins") {
  const SyntheticSpec spec{3, 100000, 0.0, std::vector<double>(3, 0.5), std::vector<double>(3, 0.5), 4};
  const auto data = isml::generate(spec);
  const double se = std::sqrt(0.25 / 100000.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double pos = 0.0;
    for (auto x : data.z.row(i)) pos += x > 0;
    CHECK(std::abs(pos / 100000.0 - 0.5) <= 3.0 * se);
  }
}

TEST_CASE("label prior follows b") {
  const SyntheticSpec spec{3, 100000, 0.6, std::vector<double>(3, 0.7), std::vector<double>(3, 0.7), 5};
  const auto data = isml::generate(spec);
  double pos = 0.0;
  for (auto y : data.y) pos += y > 0;
  CHECK(std::abs(pos / 100000.0 - 0.8) <= 3.0 * std::sqrt(0.16 / 100000.0));
}

TEST_CASE("generator faithfulness and conditional independence") {
  const auto spec = isml::uniform_accuracy_spec(6, 100000, -0.2, 0.5, 0.9, 6);
  const auto data = isml::generate(spec);
  for (std::size_t i = 0; i < 6; ++i) {
    double pos = 0.0, tp = 0.0, neg = 0.0, tn = 0.0;
    for (std::size_t j = 0; j < data.z.n(); ++j) {
      if (data.y[j] > 0) {
        ++pos;
        tp += data.z(i, j) > 0;
      } else {
        ++neg;
        tn += data.z(i, j) < 0;
      }
    }
    CHECK(std::abs(tp / pos - spec.psi[i]) <= 3.0 * std::sqrt(spec.psi[i] * (1 - spec.psi[i]) / pos));
    CHECK(std::abs(tn / neg - spec.eta[i]) <= 3.0 * std::sqrt(spec.eta[i] * (1 - spec.eta[i]) / neg));
  }
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {2, 5}, {3, 4}};
  for (auto [a, b] : pairs) {
    for (int cls : {1, -1}) {
      double count = 0.0, both = 0.0, fa = 0.0, fb = 0.0;
      for (std::size_t j = 0; j < data.z.n(); ++j) {
        if (data.y[j] != cls) continue;
        ++count;
        fa += data.z(a, j) > 0;
        fb += data.z(b, j) > 0;
        both += data.z(a, j) > 0 && data.z(b, j) > 0;
      }
      const double joint = both / count;
      const double product = (fa / count) * (fb / count);
      CHECK(std::abs(joint - product) <= 3.0 * std::sqrt(joint * (1 - joint) / count));
    }
  }
}

TEST_CASE("spec validation") {
  SyntheticSpec spec{3, 10, 0.0, {0.6, 0.6, 0.6}, {0.6, 0.6, 0.6}, 0};
  spec.b = 1.0;
  REQUIRE_ISML_ERROR(isml::generate(spec), ErrorCode::SpecOutOfRange);
  spec.b = 0.0;
  spec.psi = {0.6, 0.6};
  REQUIRE_ISML_ERROR(isml::generate(spec), ErrorCode::SpecOutOfRange);
  spec.psi = {0.6, 1.2, 0.6};
  REQUIRE_ISML_ERROR(isml::generate(spec), ErrorCode::SpecOutOfRange);
  spec.psi = {0.6, 0.6, 0.6};
  spec.m = 2;
  REQUIRE_ISML_ERROR(isml::generate(spec), ErrorCode::SpecOutOfRange);
}

TEST_CASE("generation does not depend on evaluation order") {
  const auto spec = isml::uniform_accuracy_spec(5, 300, 0.1, 0.5, 0.8, 8);
  const auto full = isml::generate(spec);
  auto shorter = spec;
  shorter.n = 100;
  const auto prefix = isml::generate(shorter);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 100; ++j) CHECK(full.z(i, j) == prefix.z(i, j));
  }
  CHECK(isml::generate(spec).z == full.z);
}

TEST_CASE("multiclass generator follows the confusion columns") {
  const auto set = isml::random_confusions(3, 3, 0.5, 0.8, 1);
  const std::vector<double> priors = {0.5, 0.3, 0.2};
  const auto data = isml::generate_multiclass(set, priors, 60000, 2);
  std::vector<double> counts(3, 0.0);
  for (int y : data.y) counts[static_cast<std::size_t>(y - 1)] += 1.0;
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::abs(counts[c] / 60000.0 - priors[c]) <= 3.0 * std::sqrt(priors[c] * (1 - priors[c]) / 60000.0));
  }
  for (int truth = 1; truth <= 3; ++truth) {
    for (int pred = 1; pred <= 3; ++pred) {
      double hits = 0.0, total = 0.0;
      for (std::size_t j = 0; j < data.z.n(); ++j) {
        if (data.y[j] != truth) continue;
        ++total;
        hits += data.z(0, j) == pred;
      }
      const double p = set.matrices[0](pred, truth);
      CHECK(std::abs(hits / total - p) <= 3.5 * std::sqrt(p * (1 - p) / total));
    }
  }
}

TEST_CASE("log-log slope") {
  const std::pair<double, double> exact[] = {{10, 1}, {100, 0.1}, {1000, 0.01}};
  CHECK_THAT(isml::fit_loglog_slope(exact), WithinAbs(-1.0, 1e-12));
  const std::pair<double, double> flat[] = {{10, 2}, {100, 2}, {1000, 2}};
  CHECK_THAT(isml::fit_loglog_slope(flat), WithinAbs(0.0, 1e-12));
  const std::pair<double, double> zero[] = {{10, 1}, {100, 0}, {1000, 0.01}};
  REQUIRE_ISML_ERROR(isml::fit_loglog_slope(zero), ErrorCode::NonPositiveValue);
  const std::pair<double, double> two[] = {{10, 1}, {100, 0.1}};
  REQUIRE_ISML_ERROR(isml::fit_loglog_slope(two), ErrorCode::InvalidArgument);
}

TEST_CASE("imbalance experiment is deterministic and thread independent") {
  const auto base = isml::uniform_accuracy_spec(6, 500, 0.0, 0.5, 0.8, 42);
  const double bs[] = {0.0, 0.4};
  const std::size_t ns[] = {400, 800};
  isml::ImbalanceExperimentOptions opts;
  const auto a = isml::run_imbalance_experiment(bs, ns, 4, base, opts);
  opts.threads = 4;
  const auto b = isml::run_imbalance_experiment(bs, ns, 4, base, opts);
  CHECK(isml::to_csv(a) == isml::to_csv(b));
  CHECK(isml::to_plot_data(a) == isml::to_plot_data(b));
  CHECK(a.cells.size() == 4 * 6);
  for (const auto& cell : a.cells) {
    CHECK(cell.trials + cell.failures == 4);
    if (cell.trials > 0) CHECK(cell.std >= 0.0);
  }
  REQUIRE_ISML_ERROR(isml::run_imbalance_experiment(bs, ns, 1, base, opts), ErrorCode::InvalidArgument);
}

TEST_CASE("b = 0 estimates are centred") {
  const auto base = isml::uniform_accuracy_spec(10, 1000, 0.0, 0.5, 0.8, 7);
  const double bs[] = {0.0};
  const std::size_t ns[] = {20000};
  const auto r = isml::run_imbalance_experiment(bs, ns, 20, base);
  for (const char* metric : {"tensor.b_hat", "likelihood.b_hat"}) {
    const auto& cell = r.cell({{"b", "0"}, {"n", "20000"}}, metric);
    CHECK(std::abs(cell.mean) <= 3.0 * cell.std / std::sqrt(static_cast<double>(cell.trials)));
  }
}

TEST_CASE("failures are counted, not averaged") {
  // Fair-coin classifiers make every estimate degenerate or meaningless;
  // with psi = eta = 0.5 population structure is absent.
  SyntheticSpec base{4, 3, 0.0, std::vector<double>(4, 0.5), std::vector<double>(4, 0.5), 1};
  isml::ImbalanceExperimentOptions opts;
  opts.accuracy_range.reset();
  const double bs[] = {0.0};
  const std::size_t ns[] = {3};
  const auto r = isml::run_imbalance_experiment(bs, ns, 30, base, opts);
  const auto& cell = r.cell({{"b", "0"}, {"n", "3"}}, "tensor.b_hat");
  CHECK(cell.trials + cell.failures == 30);
  CHECK(cell.failures > 0);
  const auto values = r.values({{"b", "0"}, {"n", "3"}}, "tensor.b_hat");
  std::size_t nans = 0;
  for (double v : values) nans += std::isnan(v);
  CHECK(nans == cell.failures);
}

TEST_CASE("csv and plot layout") {
  isml::ExperimentResult r;
  r.config_columns = {"method"};
  r.cells.push_back({{{"method", "mv"}}, "balanced_accuracy", 0.75, 0.01, 3, 0});
  r.cells.push_back({{{"method", "sml"}}, "balanced_accuracy", 0.8, 0.02, 3, 0});
  CHECK(isml::to_csv(r) == "method,metric,mean,std,trials,failures\nmv,balanced_accuracy,0.75,0.01,3,0\nsml,balanced_accuracy,0.8,0.02,3,0\n");
  CHECK(isml::to_plot_data(r) == "# method mean std trials\n# metric balanced_accuracy\nmv 0.75 0.01 3\nsml 0.8 0.02 3\n");
}

TEST_CASE("ensemble comparison with perfect classifiers") {
  const auto factory = [](std::size_t trial) {
    return SyntheticSpec{5, 200, 0.1, std::vector<double>(5, 1.0), std::vector<double>(5, 1.0), trial};
  };
  const auto r = isml::run_ensemble_comparison(factory, 3);
  CHECK(r.cells.size() == 4);
  for (const auto& cell : r.cells) {
    CHECK(cell.mean == 1.0);
    CHECK(cell.failures == 0);
  }
}

TEST_CASE("oracle is at least as good as i-SML on average") {
  const auto r = isml::run_ensemble_comparison(isml::uniform_scenario(10, 5000, 0.2, 0.5, 0.8, 3), 30);
  CHECK(r.cell({{"method", "oracle"}}, "balanced_accuracy").mean >=
        r.cell({{"method", "isml"}}, "balanced_accuracy").mean - 0.005);
}

TEST_CASE("EM column is optional") {
  isml::EnsembleExperimentOptions opts;
  opts.include_em = true;
  const auto r = isml::run_ensemble_comparison(isml::uniform_scenario(8, 2000, 0.0, 0.55, 0.85, 4), 3, opts);
  CHECK(r.cells.size() == 5);
  CHECK(r.cell({{"method", "isml-em"}}, "balanced_accuracy").trials == 3);
}

TEST_CASE("MAE versus m") {
  SyntheticSpec base = isml::uniform_accuracy_spec(3, 10000, 0.3, 0.5, 0.8, 11);
  const std::size_t ms[] = {3, 5, 15};
  const auto r = isml::run_mae_vs_m_experiment(ms, 50, base);
  const auto& m3 = r.cell({{"b", "0.3"}, {"m", "3"}}, "tensor.abs_err");
  CHECK(m3.trials + m3.failures == 50);
  CHECK(r.cell({{"b", "0.3"}, {"m", "15"}}, "tensor.abs_err").mean <=
        r.cell({{"b", "0.3"}, {"m", "5"}}, "tensor.abs_err").mean);
  const auto again = isml::run_mae_vs_m_experiment(ms, 50, base);
  CHECK(isml::to_csv(again) == isml::to_csv(r));
  const std::size_t bad[] = {2};
  REQUIRE_ISML_ERROR(isml::run_mae_vs_m_experiment(bad, 2, base), ErrorCode::TooFewClassifiers);
}

TEST_CASE("parallel_for rethrows worker errors") {
  CHECK_THROWS_AS(isml::parallel_for(8, 3, [](std::size_t i) {
                    if (i == 5) throw isml::Error(ErrorCode::InvalidArgument, "boom");
                  }),
                  isml::Error);
  std::vector<int> hits(100, 0);
  isml::parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}
