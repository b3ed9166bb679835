#include "wlfrail/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wlfrail/association.hpp"
#include "wlfrail/dataio.hpp"
#include "wlfrail/em.hpp"
#include "wlfrail/errors.hpp"
#include "wlfrail/simulation.hpp"

namespace wlfrail {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct FitArgs {
  std::string data_path, time_col, status_col, cluster_col, covars, dist = "np";
  std::string out_path;
  double eps = 1e-6;
  int max_iter = 500;
  double theta0 = 0.5;
};

int run_fit(const FitArgs& args) {
  CsvSpec spec;
  spec.time_col = args.time_col;
  spec.status_col = args.status_col;
  spec.cluster_col = args.cluster_col;
  spec.covariate_cols = split_list(args.covars);
  const Dataset data = load_csv(args.data_path, spec);

  FitConfig cfg;
  cfg.baseline_kind = args.dist == "weibull" ? BaselineKind::weibull
                                             : BaselineKind::nonparametric;
  cfg.eps = args.eps;
  cfg.max_em_iter = args.max_iter;
  cfg.theta_init = args.theta0;
  const FitResult fit = fit_frailty(data, cfg);
  write_result(fit, args.out_path);
  for (const auto& w : fit.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  std::cout << "converged in " << fit.n_iter << " iterations; theta = "
            << fit.theta_hat << "; results written to " << args.out_path
            << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string fitter = "np";
  std::string out_path;
  int reps = -1;
  long long seed = -1;
  int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig cfg = load_scenario(args.scenario_path);
  if (args.reps > 0) cfg.n_replicates = args.reps;
  if (args.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(args.seed);
  const FitterKind fitter = args.fitter == "weibull" ? FitterKind::weibull
                                                     : FitterKind::semiparametric;
  const MetricsSummary summary = recovery_study(cfg, fitter, args.threads);
  write_metrics(summary, cfg, fitter, args.out_path);
  std::cout << "replicates: " << summary.n_replicates
            << " (failed: " << summary.n_failed << "); metrics written to "
            << args.out_path << "\n";
  return kExitOk;
}

int run_tau(double theta, const std::string& model) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  if (model == "wl" || model == "all") {
    out << "wl " << kendall_tau_wl(theta) << "\n";
  }
  if (model == "gamma" || model == "all") {
    out << "gamma " << kendall_tau_gamma(theta) << "\n";
  }
  if (model == "ig" || model == "all") {
    out << "ig " << kendall_tau_ig(theta) << "\n";
  }
  std::cout << out.str();
  return kExitOk;
}

struct PredictArgs {
  std::string fit_path;
  std::string profile;
  std::string mode = "marginal";
  double z = 1.0;
  std::string grid;
  std::string out_path;
};

int run_predict(const PredictArgs& args) {
  const FitResult fit = read_result(args.fit_path);

  Eigen::VectorXd profile = Eigen::VectorXd::Zero(fit.beta_hat.size());
  if (!args.profile.empty()) {
    for (const auto& assignment : split_list(args.profile)) {
      const auto eq = assignment.find('=');
      if (eq == std::string::npos) {
        throw DataError("predict: profile entries must be name=value, got '" +
                        assignment + "'");
      }
      const std::string name = assignment.substr(0, eq);
      const auto it = std::find(fit.covariate_names.begin(),
                                fit.covariate_names.end(), name);
      if (it == fit.covariate_names.end()) {
        throw DataError("predict: unknown covariate '" + name + "'");
      }
      try {
        profile(it - fit.covariate_names.begin()) =
            std::stod(assignment.substr(eq + 1));
      } catch (const std::exception&) {
        throw DataError("predict: invalid value in '" + assignment + "'");
      }
    }
  }

  // grid t1:t2:n
  const std::vector<std::string> parts = [&] {
    std::vector<std::string> p;
    std::stringstream ss(args.grid);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(item);
    return p;
  }();
  if (parts.size() != 3) {
    throw DataError("predict: --grid must be t1:t2:n");
  }
  double t1 = 0.0, t2 = 0.0;
  int n = 0;
  try {
    t1 = std::stod(parts[0]);
    t2 = std::stod(parts[1]);
    n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw DataError("predict: invalid --grid values");
  }
  if (!(t1 >= 0.0) || !(t2 > t1) || n < 2) {
    throw DataError("predict: need 0 <= t1 < t2 and n >= 2");
  }
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = t1 + (t2 - t1) * i / (n - 1);
  }

  const SurvivalKind kind = args.mode == "conditional"
                                ? SurvivalKind::conditional
                                : SurvivalKind::marginal;
  try {
    const SurvivalCurve curve = predict_survival(fit, profile, kind, args.z, grid);
    write_curve_csv(curve, args.out_path);
  } catch (const std::domain_error& e) {
    throw DataError(std::string("predict: ") + e.what());
  }
  std::cout << "curve written to " << args.out_path << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Shared weighted-Lindley frailty models for clustered survival data"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit the WL frailty model to CSV data");
  fit->add_option("--data", fit_args.data_path, "CSV file")->required();
  fit->add_option("--time", fit_args.time_col, "time column")->required();
  fit->add_option("--status", fit_args.status_col, "status column (0/1)")->required();
  fit->add_option("--cluster", fit_args.cluster_col, "cluster id column")->required();
  fit->add_option("--covars", fit_args.covars, "comma-separated covariate columns")->required();
  fit->add_option("--dist", fit_args.dist, "baseline: np or weibull")
      ->check(CLI::IsMember({"np", "weibull"}));
  fit->add_option("--eps", fit_args.eps, "EM tolerance");
  fit->add_option("--max-iter", fit_args.max_iter, "EM iteration cap");
  fit->add_option("--theta0", fit_args.theta0, "initial theta");
  fit->add_option("--out", fit_args.out_path, "output JSON path")->required();

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Run a scenario recovery study");
  sim->add_option("--scenario", sim_args.scenario_path, "scenario file")->required();
  sim->add_option("--reps", sim_args.reps, "override replicate count");
  sim->add_option("--fitter", sim_args.fitter, "np or weibull")
      ->check(CLI::IsMember({"np", "weibull"}));
  sim->add_option("--seed", sim_args.seed, "override base seed");
  sim->add_option("--threads", sim_args.threads, "worker threads (0 = auto)");
  sim->add_option("--out", sim_args.out_path, "output JSON path")->required();

  double tau_theta = 0.0;
  std::string tau_model = "all";
  CLI::App* tau = app.add_subcommand("tau", "Kendall's tau for a frailty variance");
  tau->add_option("--theta", tau_theta, "frailty variance")->required();
  tau->add_option("--model", tau_model, "wl, gamma, ig or all")
      ->check(CLI::IsMember({"wl", "gamma", "ig", "all"}));

  PredictArgs pred_args;
  CLI::App* pred = app.add_subcommand("predict", "Survival curve from a fit result");
  pred->add_option("--fit", pred_args.fit_path, "fit result JSON")->required();
  pred->add_option("--profile", pred_args.profile, "covariate profile k=v,...");
  pred->add_option("--mode", pred_args.mode, "marginal or conditional")
      ->check(CLI::IsMember({"marginal", "conditional"}));
  pred->add_option("--z", pred_args.z, "frailty value for conditional curves");
  pred->add_option("--grid", pred_args.grid, "time grid t1:t2:n")->required();
  pred->add_option("--out", pred_args.out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return run_fit(fit_args);
    if (sim->parsed()) return run_simulate(sim_args);
    if (tau->parsed()) {
      if (!(tau_theta > 0.0)) {
        std::cerr << "error: --theta must be positive\n";
        return kExitUsage;
      }
      return run_tau(tau_theta, tau_model);
    }
    if (pred->parsed()) return run_predict(pred_args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const EmMaxIterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const SingularHessianError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace wlfrail
