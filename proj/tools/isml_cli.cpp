// isml: unsupervised accuracy estimation and ensemble prediction from the
// command line.
//
//   isml estimate --input preds.csv --method both
//   isml predict  --input preds.csv --ensemble isml --out labels.csv
//   isml simulate --scenario imbalance --seed 42 --out mse.csv

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isml/isml.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitDegenerate = 3;

struct RunConfig {
  std::string input;
  std::string encoding = "pm_one";
  bool transpose = false;
  std::string method = "both";
  double delta = 0.05;
  double eps = 1e-3;
  double grid_step = 1e-3;
  std::uint64_t seed = 42;
  std::string out;
  std::string format;
  bool text_errors = false;

  // estimate
  int classes = 0;

  // predict
  std::string ensemble = "isml";

  // simulate
  std::string scenario;
  std::string scenario_file;
  std::size_t trials = 0;
  std::size_t threads = 1;
  std::vector<double> b_values;
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> m_values;
  std::size_t n = 0;
  std::size_t m = 0;
  double b = 0.0;
  std::string profile = "heterogeneous";
  bool with_em = false;
  std::string plot_out;
};

/// Failure carrying the exit status and a machine-readable code.
struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

int exit_code_for(isml::ErrorCode code) {
  return isml::is_parse_error(code) ? kExitParse : kExitDegenerate;
}

void report_error(const RunConfig& cfg, const CliError& err) {
  if (cfg.text_errors) {
    std::cerr << "isml: " << err.code << ": " << err.message << "\n";
    return;
  }
  const json obj = {{"error", {{"code", err.code}, {"message", err.message}, {"exit_code", err.exit_code}}}};
  std::cerr << obj.dump() << "\n";
}

CliError from_library(const isml::Error& e) {
  return {exit_code_for(e.code()), std::string(e.name()), e.what()};
}

void check_config(const RunConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 0.5)) throw CliError{kExitUsage, "Usage", "--delta must lie in (0, 0.5)"};
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw CliError{kExitUsage, "Usage", "--eps must lie in (0, 0.5)"};
  if (!(cfg.grid_step > 0.0)) throw CliError{kExitUsage, "Usage", "--grid-step must be positive"};
}

isml::ImbalanceOptions estimator_options(const RunConfig& cfg) {
  isml::ImbalanceOptions opts;
  opts.delta = cfg.delta;
  opts.eps = cfg.eps;
  opts.grid_step = cfg.grid_step;
  return opts;
}

std::string read_input(const RunConfig& cfg) {
  if (cfg.input.empty() || cfg.input == "-") return isml::detail::read_all(std::cin);
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw CliError{kExitParse, "InputUnreadable", "cannot open input file '" + cfg.input + "'"};
  return isml::detail::read_all(in);
}

isml::PredictionMatrix load_binary(const RunConfig& cfg) {
  const auto encoding = cfg.encoding == "zero_one" ? isml::Encoding::zero_one : isml::Encoding::pm_one;
  return isml::parse_prediction_csv(read_input(cfg), encoding, cfg.transpose);
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw CliError{kExitUsage, "OutputUnwritable", "cannot open output file '" + cfg.out + "'"};
  out << text;
}

std::string fmt(double x) { return isml::format_number(x, 17); }

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

json report_json(const isml::AccuracyReport& r) {
  json classifiers = json::array();
  for (std::size_t i = 0; i < r.acc.size(); ++i) {
    classifiers.push_back({{"psi", r.acc.psi[i]},
                           {"eta", r.acc.eta[i]},
                           {"pi", r.acc.pi[i]},
                           {"clipped", r.acc.clipped(i)},
                           {"raw_psi", r.acc.raw_psi[i]},
                           {"raw_eta", r.acc.raw_eta[i]}});
  }
  const auto& sv = r.imbalance.spectral;
  json report = {{"method", std::string(isml::to_string(r.imbalance.method))},
                 {"b", r.imbalance.b},
                 {"delta", r.imbalance.delta},
                 {"classifiers", classifiers},
                 {"v", sv.v},
                 {"residual", sv.residual},
                 {"spectral", {{"eigenvalue", sv.eigenvalue},
                               {"iterations", sv.iterations},
                               {"converged", sv.converged},
                               {"initial_residual", sv.initial_residual}}}};
  if (r.imbalance.alpha) report["alpha"] = *r.imbalance.alpha;
  return report;
}

std::string reports_csv(const std::vector<isml::AccuracyReport>& reports) {
  std::string out = "method,b,classifier,psi,eta,pi,clipped,raw_psi,raw_eta,v\n";
  for (const auto& r : reports) {
    const std::string method(isml::to_string(r.imbalance.method));
    for (std::size_t i = 0; i < r.acc.size(); ++i) {
      out += method + "," + fmt(r.imbalance.b) + "," + std::to_string(i + 1) + "," + fmt(r.acc.psi[i]) + "," +
             fmt(r.acc.eta[i]) + "," + fmt(r.acc.pi[i]) + "," + (r.acc.clipped(i) ? "1" : "0") + "," +
             fmt(r.acc.raw_psi[i]) + "," + fmt(r.acc.raw_eta[i]) + "," + fmt(r.imbalance.spectral.v[i]) + "\n";
    }
  }
  return out;
}

std::vector<isml::ImbalanceMethod> methods_for(const std::string& name) {
  if (name == "tensor") return {isml::ImbalanceMethod::tensor};
  if (name == "likelihood") return {isml::ImbalanceMethod::likelihood};
  return {isml::ImbalanceMethod::tensor, isml::ImbalanceMethod::likelihood};
}

int run_multiclass_estimate(const RunConfig& cfg) {
  const auto zm = isml::parse_multiclass_csv(read_input(cfg), cfg.classes, cfg.transpose);
  json doc = {{"m", zm.m()}, {"n", zm.n()}, {"classes", zm.num_classes()}, {"reports", json::array()}};
  std::string csv = "method,class,p,p_normalized,status";
  for (std::size_t i = 0; i < zm.m(); ++i) csv += ",diag_" + std::to_string(i + 1);
  csv += "\n";
  int status = 0;
  for (auto method : methods_for(cfg.method)) {
    const auto est = isml::estimate_probs_and_diagonals(zm, method, estimator_options(cfg));
    json classes = json::array();
    for (std::size_t c = 0; c < est.p.size(); ++c) {
      const auto& st = est.status[c];
      std::vector<double> diag;
      for (const auto& row : est.diag) diag.push_back(row[c]);
      json entry = {{"class", c + 1}, {"p", est.p[c]}, {"p_normalized", est.p_normalized[c]}, {"diag", diag},
                    {"ok", st.ok}};
      if (!st.ok) {
        entry["error"] = {{"code", std::string(isml::to_string(*st.error))}, {"message", st.message}};
        report_error(cfg, {kExitDegenerate, std::string(isml::to_string(*st.error)),
                           std::string(isml::to_string(method)) + " class " + std::to_string(c + 1) + ": " + st.message});
        status = kExitDegenerate;
      }
      classes.push_back(entry);
      csv += std::string(isml::to_string(method)) + "," + std::to_string(c + 1) + "," + fmt(est.p[c]) + "," +
             fmt(est.p_normalized[c]) + "," + (st.ok ? "ok" : std::string(isml::to_string(*st.error)));
      for (double d : diag) csv += "," + fmt(d);
      csv += "\n";
    }
    doc["reports"].push_back({{"method", std::string(isml::to_string(method))}, {"delta", cfg.delta}, {"classes", classes}});
  }
  write_output(cfg, cfg.format == "csv" ? csv : doc.dump(2) + "\n");
  return status;
}

int cmd_estimate(const RunConfig& cfg) {
  if (cfg.classes != 0) {
    if (cfg.classes < 2) throw CliError{kExitUsage, "Usage", "--classes must be at least 2"};
    return run_multiclass_estimate(cfg);
  }
  const auto z = load_binary(cfg);
  std::vector<isml::AccuracyReport> reports;
  json failures = json::array();
  int status = 0;
  for (auto method : methods_for(cfg.method)) {
    try {
      reports.push_back(isml::estimate_accuracies(z, method, estimator_options(cfg)));
    } catch (const isml::Error& e) {
      auto err = from_library(e);
      err.message = std::string(isml::to_string(method)) + ": " + err.message;
      report_error(cfg, err);
      failures.push_back({{"method", std::string(isml::to_string(method))}, {"code", err.code}, {"message", e.what()}});
      status = std::max(status, err.exit_code);
    }
  }
  json doc = {{"m", z.m()}, {"n", z.n()}, {"reports", json::array()}, {"failures", failures}};
  for (const auto& r : reports) doc["reports"].push_back(report_json(r));
  write_output(cfg, cfg.format == "csv" ? reports_csv(reports) : doc.dump(2) + "\n");
  return status;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int cmd_predict(const RunConfig& cfg) {
  if (cfg.method == "both") {
    throw CliError{kExitUsage, "Usage", "predict needs a single --method (tensor or likelihood)"};
  }
  const auto z = load_binary(cfg);
  const auto method = methods_for(cfg.method).front();
  const auto opts = estimator_options(cfg);

  isml::EnsemblePrediction pred;
  json extra = json::object();
  if (cfg.ensemble == "mv") {
    pred = isml::majority_vote(z);
  } else {
    const auto report = isml::estimate_accuracies(z, method, opts);
    extra["b"] = report.imbalance.b;
    if (cfg.ensemble == "sml") {
      pred = isml::sml_predict(z, report.imbalance.spectral.v);
    } else if (cfg.ensemble == "isml") {
      pred = isml::ml_predict(z, report.acc);
    } else {
      isml::EmOptions em_opts;
      em_opts.eps = cfg.eps;
      const auto em = isml::em_refine(z, report.acc, em_opts);
      extra["b"] = em.b;
      extra["em_iterations"] = em.iterations;
      pred = isml::ml_predict(z, em.acc);
    }
    extra["method"] = std::string(isml::to_string(method));
  }

  if (cfg.format == "json") {
    json doc = {{"ensemble", cfg.ensemble}, {"n", z.n()}, {"labels", pred.labels}, {"scores", pred.scores}};
    doc.update(extra);
    write_output(cfg, doc.dump(2) + "\n");
  } else {
    std::string out = "instance,label,score\n";
    for (std::size_t j = 0; j < z.n(); ++j) {
      out += std::to_string(j + 1) + "," + std::to_string(int{pred.labels[j]}) + "," + fmt(pred.scores[j]) + "\n";
    }
    write_output(cfg, out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

template <typename T>
void take(const json& file, const char* key, T& target) {
  if (file.contains(key)) target = file.at(key).get<T>();
}

/// Values from --scenario-file fill in whatever the command line left unset.
void merge_scenario_file(RunConfig& cfg, const CLI::App& sim) {
  std::ifstream in(cfg.scenario_file);
  if (!in) throw CliError{kExitUsage, "ScenarioUnreadable", "cannot open scenario file '" + cfg.scenario_file + "'"};
  json file;
  try {
    file = json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{kExitUsage, "BadScenarioFile", e.what()};
  }
  auto unset = [&](const char* flag) { return sim.count(flag) == 0; };
  try {
    if (unset("--scenario")) take(file, "scenario", cfg.scenario);
    if (unset("--trials")) take(file, "trials", cfg.trials);
    if (unset("--seed")) take(file, "seed", cfg.seed);
    if (unset("--b-values")) take(file, "b_values", cfg.b_values);
    if (unset("--n-values")) take(file, "n_values", cfg.n_values);
    if (unset("--m-values")) take(file, "m_values", cfg.m_values);
    if (unset("--n")) take(file, "n", cfg.n);
    if (unset("--m")) take(file, "m", cfg.m);
    if (unset("--b")) take(file, "b", cfg.b);
    if (unset("--profile")) take(file, "profile", cfg.profile);
    if (unset("--delta")) take(file, "delta", cfg.delta);
    if (unset("--eps")) take(file, "eps", cfg.eps);
    if (unset("--grid-step")) take(file, "grid_step", cfg.grid_step);
    if (unset("--em")) take(file, "em", cfg.with_em);
  } catch (const json::exception& e) {
    throw CliError{kExitUsage, "BadScenarioFile", e.what()};
  }
}

json result_json(const isml::ExperimentResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json config = json::object();
    for (const auto& [k, v] : c.config) config[k] = v;
    cells.push_back({{"config", config},
                     {"metric", c.metric},
                     {"mean", c.mean},
                     {"std", c.std},
                     {"trials", c.trials},
                     {"failures", c.failures}});
  }
  return {{"config_columns", r.config_columns}, {"cells", cells}};
}

int cmd_simulate(RunConfig cfg, const CLI::App& sim) {
  if (!cfg.scenario_file.empty()) merge_scenario_file(cfg, sim);
  check_config(cfg);
  if (cfg.scenario.empty()) throw CliError{kExitUsage, "UnknownScenario", "no --scenario given"};

  isml::ImbalanceOptions est = estimator_options(cfg);
  isml::ExperimentResult result;
  std::string label;
  if (cfg.scenario == "imbalance") {
    if (cfg.b_values.empty()) cfg.b_values = {0.0, 0.3, 0.6};
    if (cfg.n_values.empty()) cfg.n_values = {1250, 2500, 5000, 10000, 20000, 40000};
    if (cfg.trials == 0) cfg.trials = 30;
    if (cfg.m == 0) cfg.m = 10;
    auto base = isml::uniform_accuracy_spec(cfg.m, cfg.n_values.front(), 0.0, 0.5, 0.8, cfg.seed);
    isml::ImbalanceExperimentOptions opts;
    opts.estimator = est;
    opts.threads = cfg.threads;
    result = isml::run_imbalance_experiment(cfg.b_values, cfg.n_values, cfg.trials, base, opts);
  } else if (cfg.scenario == "ensemble") {
    if (cfg.trials == 0) cfg.trials = 30;
    if (cfg.n == 0) cfg.n = 10000;
    isml::SpecFactory factory;
    if (cfg.profile == "heterogeneous") {
      factory = isml::heterogeneous_scenario(cfg.n, cfg.b, cfg.seed);
    } else if (cfg.profile == "uniform") {
      factory = isml::uniform_scenario(cfg.m == 0 ? 10 : cfg.m, cfg.n, cfg.b, 0.5, 0.8, cfg.seed);
    } else {
      throw CliError{kExitUsage, "UnknownScenario", "unknown ensemble profile '" + cfg.profile + "'"};
    }
    isml::EnsembleExperimentOptions opts;
    opts.estimator = est;
    opts.include_em = cfg.with_em;
    opts.em.eps = cfg.eps;
    opts.threads = cfg.threads;
    result = isml::run_ensemble_comparison(factory, cfg.trials, opts);
  } else if (cfg.scenario == "mae-vs-m") {
    if (cfg.m_values.empty()) cfg.m_values = {3, 5, 10, 15, 20, 25};
    if (cfg.trials == 0) cfg.trials = 50;
    if (cfg.n == 0) cfg.n = 10000;
    isml::SyntheticSpec base;
    base.n = cfg.n;
    base.b = cfg.b_values.empty() ? 0.3 : cfg.b_values.front();
    base.seed = cfg.seed;
    isml::MaeExperimentOptions opts;
    opts.estimator = est;
    opts.threads = cfg.threads;
    result = isml::run_mae_vs_m_experiment(cfg.m_values, cfg.trials, base, opts);
  } else {
    throw CliError{kExitUsage, "UnknownScenario", "unknown scenario '" + cfg.scenario + "'"};
  }

  write_output(cfg, cfg.format == "json" ? result_json(result).dump(2) + "\n" : isml::to_csv(result));
  if (!cfg.plot_out.empty()) {
    std::ofstream plot(cfg.plot_out, std::ios::binary);
    if (!plot) throw CliError{kExitUsage, "OutputUnwritable", "cannot open plot file '" + cfg.plot_out + "'"};
    plot << isml::to_plot_data(result);
  }

  std::size_t failures = 0;
  for (const auto& c : result.cells) failures += c.failures;
  std::cerr << "scenario " << cfg.scenario << ": " << result.cells.size() << " cells, " << cfg.trials
            << " trials per cell, " << failures << " failed estimates\n";
  return 0;
}

void add_common(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--delta", cfg.delta, "Imbalance search band: b in [-1+delta, 1-delta]")->capture_default_str();
  sub.add_option("--eps", cfg.eps, "Clip accuracies into [eps, 1-eps]")->capture_default_str();
  sub.add_option("--grid-step", cfg.grid_step, "Likelihood grid spacing")->capture_default_str();
  sub.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub.add_option("--out", cfg.out, "Output file (default: stdout)");
  sub.add_option("--format", cfg.format, "Output format (estimate: json, otherwise csv)")
      ->check(CLI::IsMember({"json", "csv"}));
}

void add_input(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--input", cfg.input, "Prediction CSV, rows = classifiers ('-' for stdin)")->required();
  sub.add_option("--encoding", cfg.encoding, "Label alphabet")
      ->check(CLI::IsMember({"pm_one", "zero_one"}))
      ->capture_default_str();
  sub.add_flag("--transpose", cfg.transpose, "Input rows are instances");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Unsupervised estimation of classifier accuracies and class imbalance"};
  app.require_subcommand(1);
  app.add_flag("--text-errors", cfg.text_errors, "Print errors as plain text instead of JSON");

  auto* estimate = app.add_subcommand("estimate", "Estimate b and per-classifier sensitivity/specificity");
  add_input(*estimate, cfg);
  add_common(*estimate, cfg);
  estimate->add_option("--method", cfg.method, "Imbalance estimator")
      ->check(CLI::IsMember({"tensor", "likelihood", "both"}))
      ->capture_default_str();
  estimate->add_option("--classes", cfg.classes, "Treat input as multiclass labels 1..K");

  auto* predict = app.add_subcommand("predict", "Label instances with an unsupervised ensemble");
  add_input(*predict, cfg);
  add_common(*predict, cfg);
  predict->add_option("--method", cfg.method, "Imbalance estimator feeding sml/isml")
      ->check(CLI::IsMember({"tensor", "likelihood", "both"}))
      ->default_str("likelihood");
  predict->add_option("--ensemble", cfg.ensemble, "Ensemble rule")
      ->check(CLI::IsMember({"mv", "sml", "isml", "isml-em"}))
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Run a synthetic experiment");
  add_common(*simulate, cfg);
  simulate->add_option("--scenario", cfg.scenario, "imbalance | ensemble | mae-vs-m");
  simulate->add_option("--scenario-file", cfg.scenario_file, "JSON file with scenario parameters");
  simulate->add_option("--trials", cfg.trials, "Trials per cell");
  simulate->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();
  simulate->add_option("--b-values", cfg.b_values, "Class imbalances")->delimiter(',');
  simulate->add_option("--n-values", cfg.n_values, "Sample sizes")->delimiter(',');
  simulate->add_option("--m-values", cfg.m_values, "Ensemble sizes (mae-vs-m)")->delimiter(',');
  simulate->add_option("--n", cfg.n, "Sample size (ensemble, mae-vs-m)");
  simulate->add_option("--m", cfg.m, "Ensemble size (imbalance, uniform profile)");
  simulate->add_option("--b", cfg.b, "Class imbalance (ensemble)");
  simulate->add_option("--profile", cfg.profile, "Ensemble profile: heterogeneous | uniform")->capture_default_str();
  simulate->add_flag("--em", cfg.with_em, "Also score EM refinement of i-SML");
  simulate->add_option("--plot-out", cfg.plot_out, "Also write plot data to this file");


  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(cfg, {kExitUsage, "Usage", e.what()});
    return kExitUsage;
  }
  // predict defaults to the likelihood route; estimate runs both.
  if (*predict && predict->count("--method") == 0) cfg.method = "likelihood";
  if (cfg.format.empty()) cfg.format = *estimate ? "json" : "csv";

  try {
    if (*simulate) return cmd_simulate(cfg, *simulate);
    check_config(cfg);
    if (*estimate) return cmd_estimate(cfg);
    return cmd_predict(cfg);
  } catch (const CliError& err) {
    report_error(cfg, err);
    return err.exit_code;
  } catch (const isml::Error& e) {
    report_error(cfg, from_library(e));
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(cfg, {kExitUsage, "Internal", e.what()});
    return kExitUsage;
  }
}
