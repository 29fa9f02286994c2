#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "isml/accuracies.hpp"
#include "isml/ensemble.hpp"
#include "isml/error.hpp"
#include "isml/imbalance.hpp"
#include "isml/moments.hpp"
#include "isml/multiclass.hpp"
#include "isml/pipeline.hpp"
#include "isml/prediction_data.hpp"
#include "isml/rng.hpp"

namespace isml {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t m = 10;
  std::size_t n = 1000;
  double b = 0.0;
  std::vector<double> psi;
  std::vector<double> eta;
  std::uint64_t seed = 0;

  void check() const {
    if (m < PredictionMatrix::kMinClassifiers || n < 1) {
      throw Error(ErrorCode::SpecOutOfRange, "need m >= 3 and n >= 1");
    }
    if (psi.size() != m || eta.size() != m) {
      throw Error(ErrorCode::SpecOutOfRange, "psi/eta length must equal m");
    }
    if (!(b > -1.0 && b < 1.0)) throw Error(ErrorCode::SpecOutOfRange, "b must lie in (-1,1)");
    for (std::size_t i = 0; i < m; ++i) {
      if (!(psi[i] >= 0.0 && psi[i] <= 1.0 && eta[i] >= 0.0 && eta[i] <= 1.0)) {
        throw Error(ErrorCode::SpecOutOfRange, "psi/eta must lie in [0,1]");
      }
    }
  }
};

struct SyntheticData {
  PredictionMatrix z;
  std::vector<Label> y;
};

namespace stream_domain {
inline constexpr std::uint32_t kTruth = 1;
inline constexpr std::uint32_t kPrediction = 2;
inline constexpr std::uint32_t kAccuracy = 3;
inline constexpr std::uint32_t kConfusion = 4;
inline constexpr std::uint32_t kTruthIndex = 0xFFFFFFFFU;
}  // namespace stream_domain

/// Draws y_j with Pr(y=+1) = (1+b)/2 and f_i(x_j) independently given
/// y_j. Every draw is addressed by (seed, j, i).
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.check();
  const CounterStream rng(spec.seed);
  const double p_pos = 0.5 * (1.0 + spec.b);
  std::vector<Label> y(spec.n);
  for (std::size_t j = 0; j < spec.n; ++j) {
    y[j] = rng.uniform(j, stream_domain::kTruthIndex, stream_domain::kTruth) < p_pos ? 1 : -1;
  }
  std::vector<Label> entries(spec.m * spec.n);
  for (std::size_t i = 0; i < spec.m; ++i) {
    for (std::size_t j = 0; j < spec.n; ++j) {
      const double u = rng.uniform(j, static_cast<std::uint32_t>(i), stream_domain::kPrediction);
      Label f;
      if (y[j] > 0) {
        f = u < spec.psi[i] ? 1 : -1;
      } else {
        f = u < spec.eta[i] ? -1 : 1;
      }
      entries[i * spec.n + j] = f;
    }
  }
  return {PredictionMatrix(spec.m, spec.n, std::move(entries)), std::move(y)};
}

/// psi_i, eta_i i.i.d. uniform on [lo, hi].
inline std::pair<std::vector<double>, std::vector<double>> sample_accuracies(std::size_t m, double lo,
                                                                             double hi,
                                                                             std::uint64_t seed) {
  const CounterStream rng(seed);
  std::vector<double> psi(m), eta(m);
  for (std::size_t i = 0; i < m; ++i) {
    psi[i] = lo + (hi - lo) * rng.uniform(i, 0, stream_domain::kAccuracy);
    eta[i] = lo + (hi - lo) * rng.uniform(i, 1, stream_domain::kAccuracy);
  }
  return {std::move(psi), std::move(eta)};
}

inline SyntheticSpec uniform_accuracy_spec(std::size_t m, std::size_t n, double b, double lo,
                                           double hi, std::uint64_t seed) {
  auto [psi, eta] = sample_accuracies(m, lo, hi, derive_seed(seed, 0, 0, 1));
  return {m, n, b, std::move(psi), std::move(eta), seed};
}

struct MulticlassData {
  MultiPredictionMatrix z;
  std::vector<int> y;
};

namespace detail {

inline int draw_category(double u, std::span<const double> probs) {
  double acc = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c) + 1;
  }
  return static_cast<int>(probs.size());
}

}  // namespace detail

inline MulticlassData generate_multiclass(const ConfusionSet& confusions, std::span<const double> priors,
                                          std::size_t n, std::uint64_t seed) {
  confusions.check();
  const int k = confusions.num_classes;
  if (priors.size() != static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::SpecOutOfRange, "prior vector length != K");
  }
  const std::size_t m = confusions.matrices.size();
  const CounterStream rng(seed);
  std::vector<int> y(n);
  for (std::size_t j = 0; j < n; ++j) {
    y[j] = detail::draw_category(rng.uniform(j, stream_domain::kTruthIndex, stream_domain::kTruth), priors);
  }
  std::vector<int> entries(m * n);
  std::vector<double> column(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (int r = 1; r <= k; ++r) column[static_cast<std::size_t>(r - 1)] = confusions.matrices[i](r, y[j]);
      entries[i * n + j] = detail::draw_category(
          rng.uniform(j, static_cast<std::uint32_t>(i), stream_domain::kPrediction), column);
    }
  }
  return {MultiPredictionMatrix(m, n, k, std::move(entries)), std::move(y)};
}

/// Random confusion matrices with diagonal entries uniform on [lo, hi].
/// The remaining column mass is split over the off-diagonal rows by random
/// weights, or evenly when `even_off_diagonal` is set.
inline ConfusionSet random_confusions(std::size_t m, int num_classes, double lo, double hi,
                                      std::uint64_t seed, bool even_off_diagonal = false) {
  const CounterStream rng(seed);
  ConfusionSet set{num_classes, {}};
  for (std::size_t i = 0; i < m; ++i) {
    ConfusionMatrix c(num_classes);
    for (int col = 1; col <= num_classes; ++col) {
      const auto slot = static_cast<std::uint64_t>(i) * 1024 + static_cast<std::uint64_t>(col);
      const double diag = lo + (hi - lo) * rng.uniform(slot, 0, stream_domain::kConfusion);
      c.at(col, col) = diag;
      std::vector<double> w;
      for (int row = 1; row <= num_classes; ++row) {
        if (row == col) continue;
        w.push_back(even_off_diagonal
                        ? 1.0
                        : 0.25 + rng.uniform(slot, static_cast<std::uint32_t>(row), stream_domain::kConfusion));
      }
      double total = 0.0;
      for (double x : w) total += x;
      std::size_t idx = 0;
      for (int row = 1; row <= num_classes; ++row) {
        if (row == col) continue;
        c.at(row, col) = (1.0 - diag) * w[idx++] / total;
      }
    }
    set.matrices.push_back(std::move(c));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Experiment bookkeeping
// ---------------------------------------------------------------------------

using Config = std::vector<std::pair<std::string, std::string>>;

struct CellSummary {
  Config config;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  std::size_t trials = 0;    // successful trials entering mean/std
  std::size_t failures = 0;  // trials where the estimator raised
};

struct TrialRecord {
  Config config;
  std::string metric;
  std::size_t trial = 0;
  std::optional<double> value;  // empty on failure
};

struct ExperimentResult {
  std::vector<std::string> config_columns;
  std::vector<CellSummary> cells;
  std::vector<TrialRecord> raw;

  const CellSummary& cell(const Config& config, std::string_view metric) const {
    for (const auto& c : cells) {
      if (c.config == config && c.metric == metric) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no cell for metric " + std::string(metric));
  }

  /// Per-trial values (trial order); failures appear as NaN.
  std::vector<double> values(const Config& config, std::string_view metric) const {
    std::vector<double> out;
    for (const auto& r : raw) {
      if (r.config == config && r.metric == metric) {
        out.push_back(r.value.value_or(std::numeric_limits<double>::quiet_NaN()));
      }
    }
    return out;
  }

  void append(const ExperimentResult& other) {
    if (config_columns.empty()) config_columns = other.config_columns;
    cells.insert(cells.end(), other.cells.begin(), other.cells.end());
    raw.insert(raw.end(), other.raw.begin(), other.raw.end());
  }
};

struct MetricValue {
  std::string metric;
  std::optional<double> value;
};

inline std::string format_number(double x, int digits = 12) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results
/// must be written to per-index slots; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Evaluates `trial_fn(cell, trial)` over every (cell, trial) pair and
/// aggregates each metric per cell in trial order.
template <typename TrialFn>
ExperimentResult run_grid(std::vector<std::string> columns, const std::vector<Config>& cells,
                          std::size_t trials, std::size_t threads, TrialFn&& trial_fn) {
  const std::size_t tasks = cells.size() * trials;
  std::vector<std::vector<MetricValue>> outcomes(tasks);
  parallel_for(tasks, threads, [&](std::size_t task) {
    outcomes[task] = trial_fn(task / trials, task % trials);
  });

  ExperimentResult result;
  result.config_columns = std::move(columns);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<std::string> metrics;
    for (std::size_t t = 0; t < trials; ++t) {
      for (const auto& mv : outcomes[c * trials + t]) {
        if (std::find(metrics.begin(), metrics.end(), mv.metric) == metrics.end()) {
          metrics.push_back(mv.metric);
        }
      }
    }
    for (const auto& metric : metrics) {
      CellSummary summary{cells[c], metric};
      double sum = 0.0;
      std::vector<double> ok;
      for (std::size_t t = 0; t < trials; ++t) {
        for (const auto& mv : outcomes[c * trials + t]) {
          if (mv.metric != metric) continue;
          result.raw.push_back({cells[c], metric, t, mv.value});
          if (mv.value) {
            ok.push_back(*mv.value);
            sum += *mv.value;
          } else {
            ++summary.failures;
          }
        }
      }
      summary.trials = ok.size();
      if (ok.empty()) {
        summary.mean = summary.std = std::numeric_limits<double>::quiet_NaN();
      } else {
        summary.mean = sum / static_cast<double>(ok.size());
        double ss = 0.0;
        for (double x : ok) ss += (x - summary.mean) * (x - summary.mean);
        summary.std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
      }
      result.cells.push_back(std::move(summary));
    }
  }
  return result;
}

/// One row per cell: config columns, metric, mean, std, trials, failures.
inline std::string to_csv(const ExperimentResult& result) {
  std::string out;
  for (const auto& col : result.config_columns) out += col + ",";
  out += "metric,mean,std,trials,failures\n";
  for (const auto& c : result.cells) {
    for (const auto& [key, value] : c.config) out += value + ",";
    out += c.metric + "," + format_number(c.mean) + "," + format_number(c.std) + "," +
           std::to_string(c.trials) + "," + std::to_string(c.failures) + "\n";
  }
  return out;
}

/// Whitespace-separated blocks, one per metric, separated by blank lines
/// (gnuplot `index` friendly).
inline std::string to_plot_data(const ExperimentResult& result) {
  std::vector<std::string> metrics;
  for (const auto& c : result.cells) {
    if (std::find(metrics.begin(), metrics.end(), c.metric) == metrics.end()) metrics.push_back(c.metric);
  }
  std::string out = "#";
  for (const auto& col : result.config_columns) out += " " + col;
  out += " mean std trials\n";
  for (std::size_t b = 0; b < metrics.size(); ++b) {
    if (b > 0) out += "\n\n";
    out += "# metric " + metrics[b] + "\n";
    for (const auto& c : result.cells) {
      if (c.metric != metrics[b]) continue;
      for (const auto& [key, value] : c.config) out += value + " ";
      out += format_number(c.mean) + " " + format_number(c.std) + " " + std::to_string(c.trials) + "\n";
    }
  }
  return out;
}

/// Ordinary least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw Error(ErrorCode::InvalidArgument, "slope fit needs at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw Error(ErrorCode::NonPositiveValue, "log-log fit needs strictly positive values");
    }
    sx += std::log(x);
    sy += std::log(y);
  }
  const double count = static_cast<double>(points.size());
  const double mx = sx / count, my = sy / count;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxy += dx * (std::log(y) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ImbalanceExperimentOptions {
  /// When set, psi/eta are redrawn uniformly on this range for every trial
  /// (shared across cells); otherwise the base spec's values are used.
  std::optional<std::pair<double, double>> accuracy_range = std::pair{0.5, 0.8};
  bool run_tensor = true;
  bool run_likelihood = true;
  ImbalanceOptions estimator;
  std::size_t threads = 1;
};

namespace detail {

template <typename F>
std::optional<double> guarded(F&& f) {
  try {
    return f();
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline void push_errors(std::vector<MetricValue>& out, std::string_view prefix,
                        std::optional<double> b_hat, double b) {
  const std::string p(prefix);
  out.push_back({p + ".b_hat", b_hat});
  out.push_back({p + ".sq_err", b_hat ? std::optional((*b_hat - b) * (*b_hat - b)) : std::nullopt});
  out.push_back({p + ".abs_err", b_hat ? std::optional(std::abs(*b_hat - b)) : std::nullopt});
}

}  // namespace detail

/// b-hat from both imbalance estimators over a (b, n) grid.
/// Metrics per method: <method>.b_hat, <method>.sq_err, <method>.abs_err.
inline ExperimentResult run_imbalance_experiment(std::span<const double> b_values,
                                                 std::span<const std::size_t> n_values,
                                                 std::size_t trials, const SyntheticSpec& base,
                                                 const ImbalanceExperimentOptions& opts = {}) {
  if (trials < 2) throw Error(ErrorCode::InvalidArgument, "imbalance experiment needs >= 2 trials");
  std::vector<Config> cells;
  std::vector<std::pair<double, std::size_t>> params;
  for (double b : b_values) {
    for (std::size_t n : n_values) {
      cells.push_back({{"b", format_number(b)}, {"n", std::to_string(n)}});
      params.emplace_back(b, n);
    }
  }
  return run_grid({"b", "n"}, cells, trials, opts.threads, [&](std::size_t cell, std::size_t trial) {
    SyntheticSpec spec = base;
    spec.b = params[cell].first;
    spec.n = params[cell].second;
    if (opts.accuracy_range) {
      auto [psi, eta] = sample_accuracies(spec.m, opts.accuracy_range->first, opts.accuracy_range->second,
                                          derive_seed(base.seed, trial, 0, 1));
      spec.psi = std::move(psi);
      spec.eta = std::move(eta);
    }
    spec.seed = derive_seed(base.seed, trial, static_cast<std::uint32_t>(cell), 2);
    const auto data = generate(spec);

    std::vector<MetricValue> out;
    if (opts.run_tensor) {
      const auto b_hat = detail::guarded(
          [&] { return estimate_b_tensor(data.z, opts.estimator.delta, opts.estimator.spectral).b; });
      detail::push_errors(out, "tensor", b_hat, spec.b);
    }
    if (opts.run_likelihood) {
      const auto b_hat = detail::guarded([&] { return estimate_b_likelihood(data.z, opts.estimator).b; });
      detail::push_errors(out, "likelihood", b_hat, spec.b);
    }
    return out;
  });
}

using SpecFactory = std::function<SyntheticSpec(std::size_t trial)>;

struct EnsembleExperimentOptions {
  ImbalanceMethod method = ImbalanceMethod::likelihood;  // b-hat source for i-SML
  ImbalanceOptions estimator;
  bool include_em = false;
  EmOptions em;
  std::size_t threads = 1;
};

/// Balanced accuracy of majority vote, SML, i-SML and the oracle ML rule
/// (true psi/eta) per trial. Config column "method"; metric "balanced_accuracy".
inline ExperimentResult run_ensemble_comparison(const SpecFactory& factory, std::size_t trials,
                                                const EnsembleExperimentOptions& opts = {}) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "ensemble comparison needs >= 1 trial");
  std::vector<std::string> methods = {"mv", "sml", "isml", "oracle"};
  if (opts.include_em) methods.push_back("isml-em");

  // Each trial produces all methods at once; cells are split afterwards.
  std::vector<std::vector<std::optional<double>>> scores(trials);
  parallel_for(trials, opts.threads, [&](std::size_t trial) {
    std::vector<std::optional<double>> row(methods.size());
    const SyntheticSpec spec = factory(trial);
    const auto data = generate(spec);
    auto score = [&](const EnsemblePrediction& pred) {
      return detail::guarded([&] { return balanced_accuracy_score(pred.labels, data.y); });
    };
    row[0] = score(majority_vote(data.z));
    try {
      const auto report = estimate_accuracies(data.z, opts.method, opts.estimator);
      row[1] = score(sml_predict(data.z, report.imbalance.spectral.v));
      row[2] = score(ml_predict(data.z, report.acc));
      if (opts.include_em) {
        const auto em = em_refine(data.z, report.acc, opts.em);
        row[4] = score(ml_predict(data.z, em.acc));
      }
    } catch (const Error&) {
    }
    row[3] = detail::guarded([&] {
      const auto truth = clip_accuracies(make_accuracies(spec.psi, spec.eta, spec.b), opts.estimator.eps);
      return balanced_accuracy_score(ml_predict(data.z, truth).labels, data.y);
    });
    scores[trial] = std::move(row);
  });

  std::vector<Config> cells;
  for (const auto& name : methods) cells.push_back({{"method", name}});
  return run_grid({"method"}, cells, trials, 1, [&](std::size_t cell, std::size_t trial) {
    return std::vector<MetricValue>{{"balanced_accuracy", scores[trial][cell]}};
  });
}

/// Two strong classifiers (psi = eta = 0.9) among eight weak ones
/// (psi = eta = 0.55): the regime where linearizing the ML rule around
/// random classifiers loses accuracy.
inline SpecFactory heterogeneous_scenario(std::size_t n, double b, std::uint64_t seed,
                                          std::size_t strong = 2, std::size_t weak = 8) {
  return [=](std::size_t trial) {
    SyntheticSpec spec;
    spec.m = strong + weak;
    spec.n = n;
    spec.b = b;
    spec.psi.assign(strong, 0.9);
    spec.psi.resize(strong + weak, 0.55);
    spec.eta = spec.psi;
    spec.seed = derive_seed(seed, trial, 0, 3);
    return spec;
  };
}

inline SpecFactory uniform_scenario(std::size_t m, std::size_t n, double b, double lo, double hi,
                                    std::uint64_t seed) {
  return [=](std::size_t trial) {
    return uniform_accuracy_spec(m, n, b, lo, hi, derive_seed(seed, trial, 0, 4));
  };
}

struct MaeExperimentOptions {
  double pi_lo = 0.69;
  double pi_hi = 0.71;
  double max_gap = 0.05;  // |psi - eta| / 2 drawn uniformly on [-max_gap, max_gap]
  ImbalanceOptions estimator;
  std::size_t threads = 1;
};

/// Mean absolute error of the tensor estimator versus the number of
/// classifiers; also reports the same fit using the true v.
/// Metrics: tensor.abs_err, tensor_true_v.abs_err.
inline ExperimentResult run_mae_vs_m_experiment(std::span<const std::size_t> m_values,
                                                std::size_t trials, const SyntheticSpec& base,
                                                const MaeExperimentOptions& opts = {}) {
  std::vector<Config> cells;
  for (std::size_t m : m_values) {
    if (m < PredictionMatrix::kMinClassifiers) {
      throw Error(ErrorCode::TooFewClassifiers, "every m must be >= 3");
    }
    cells.push_back({{"b", format_number(base.b)}, {"m", std::to_string(m)}});
  }
  return run_grid({"b", "m"}, cells, trials, opts.threads, [&](std::size_t cell, std::size_t trial) {
    SyntheticSpec spec = base;
    spec.m = m_values[cell];
    const CounterStream rng(derive_seed(base.seed, trial, static_cast<std::uint32_t>(cell), 5));
    spec.psi.resize(spec.m);
    spec.eta.resize(spec.m);
    std::vector<double> true_v(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
      const double pi = opts.pi_lo + (opts.pi_hi - opts.pi_lo) * rng.uniform(i, 0, stream_domain::kAccuracy);
      const double gap = opts.max_gap * (2.0 * rng.uniform(i, 1, stream_domain::kAccuracy) - 1.0);
      spec.psi[i] = pi + gap;
      spec.eta[i] = pi - gap;
      true_v[i] = std::sqrt(1.0 - spec.b * spec.b) * (2.0 * pi - 1.0);
    }
    spec.seed = derive_seed(base.seed, trial, static_cast<std::uint32_t>(cell), 6);
    const auto data = generate(spec);

    std::vector<MetricValue> out;
    const auto b_hat = detail::guarded(
        [&] { return estimate_b_tensor(data.z, opts.estimator.delta, opts.estimator.spectral).b; });
    out.push_back({"tensor.abs_err", b_hat ? std::optional(std::abs(*b_hat - spec.b)) : std::nullopt});
    const auto oracle = detail::guarded([&] {
      const double alpha = alpha_least_squares(sample_tensor(data.z), true_v);
      return std::clamp(b_from_alpha(alpha), -1.0 + opts.estimator.delta, 1.0 - opts.estimator.delta);
    });
    out.push_back({"tensor_true_v.abs_err", oracle ? std::optional(std::abs(*oracle - spec.b)) : std::nullopt});
    return out;
  });
}

}  // namespace isml
