#include "wlfrail/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wlfrail/errors.hpp"

namespace wlfrail {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == sep) fields.push_back("");
  return fields;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSpec& spec) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("load_csv: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("load_csv: empty file '" + path + "'");
  }
  const std::vector<std::string> header_raw = split(line, ',');
  std::vector<std::string> header;
  for (const auto& h : header_raw) header.push_back(unquote(h));

  const auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("load_csv: unknown column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t time_idx = column_index(spec.time_col);
  const std::size_t status_idx = column_index(spec.status_col);
  const std::size_t cluster_idx = column_index(spec.cluster_col);
  std::vector<std::size_t> cov_idx;
  for (const auto& c : spec.covariate_cols) cov_idx.push_back(column_index(c));

  struct Row {
    std::string cluster;
    double time;
    bool event;
    std::vector<std::string> cov_values;
  };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw DataError("load_csv: line " + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    Row row;
    row.cluster = unquote(fields[cluster_idx]);
    if (!parse_double(fields[time_idx], &row.time) || !(row.time > 0.0)) {
      throw DataError("load_csv: line " + std::to_string(line_no) +
                      ": time must be a positive real, got '" +
                      fields[time_idx] + "'");
    }
    const std::string& status = fields[status_idx];
    if (status == "0") {
      row.event = false;
    } else if (status == "1") {
      row.event = true;
    } else {
      throw DataError("load_csv: line " + std::to_string(line_no) +
                      ": status must be 0 or 1, got '" + status + "'");
    }
    for (std::size_t k : cov_idx) row.cov_values.push_back(unquote(fields[k]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw DataError("load_csv: no data rows in '" + path + "'");
  }

  // decide numeric vs categorical per covariate column
  const std::size_t n_cov = cov_idx.size();
  std::vector<bool> numeric(n_cov, true);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < n_cov; ++j) {
      double tmp;
      if (!parse_double(row.cov_values[j], &tmp)) numeric[j] = false;
    }
  }

  // expanded design: numeric columns pass through, categoricals become
  // reference-coded dummies with the alphabetically first level as reference
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> dummy_levels(n_cov);
  for (std::size_t j = 0; j < n_cov; ++j) {
    if (numeric[j]) {
      names.push_back(spec.covariate_cols[j]);
      continue;
    }
    std::set<std::string> levels;
    for (const auto& row : rows) levels.insert(row.cov_values[j]);
    if (levels.size() < 2) {
      throw DataError("load_csv: categorical column '" +
                      spec.covariate_cols[j] + "' has fewer than two levels");
    }
    auto it = levels.begin();
    ++it;  // skip reference level
    for (; it != levels.end(); ++it) {
      dummy_levels[j].push_back(*it);
      names.push_back(spec.covariate_cols[j] + *it);
    }
  }
  const int p = static_cast<int>(names.size());

  std::map<std::string, std::size_t> cluster_pos;
  std::vector<Cluster> clusters;
  for (const auto& row : rows) {
    Subject s;
    s.time = row.time;
    s.event = row.event;
    s.covariates.resize(p);
    int col = 0;
    for (std::size_t j = 0; j < n_cov; ++j) {
      if (numeric[j]) {
        double v = 0.0;
        parse_double(row.cov_values[j], &v);
        s.covariates(col++) = v;
      } else {
        for (const auto& level : dummy_levels[j]) {
          s.covariates(col++) = row.cov_values[j] == level ? 1.0 : 0.0;
        }
      }
    }
    const auto it = cluster_pos.find(row.cluster);
    if (it == cluster_pos.end()) {
      cluster_pos.emplace(row.cluster, clusters.size());
      clusters.push_back(Cluster{row.cluster, {std::move(s)}});
    } else {
      clusters[it->second].subjects.push_back(std::move(s));
    }
  }
  return Dataset(std::move(clusters), std::move(names));
}

std::string dump_csv(const Dataset& data) {
  std::ostringstream out;
  out << "cluster,time,status";
  for (const auto& n : data.covariate_names()) out << ',' << n;
  out << '\n';
  for (const auto& c : data.clusters()) {
    for (const auto& s : c.subjects) {
      out << c.id << ',' << format_g17(s.time) << ',' << (s.event ? 1 : 0);
      for (int j = 0; j < s.covariates.size(); ++j) {
        out << ',' << format_g17(s.covariates(j));
      }
      out << '\n';
    }
  }
  return out.str();
}

double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace {

json baseline_to_json(const Baseline& b) {
  json j;
  if (const auto* w = std::get_if<WeibullBaseline>(&b)) {
    j["kind"] = "weibull";
    j["lambda"] = w->lambda;
    j["rho"] = w->rho;
  } else {
    const auto& s = std::get<StepBaseline>(b);
    j["kind"] = "step";
    j["times"] = s.times;
    j["increments"] = s.increments;
  }
  return j;
}

Baseline baseline_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "weibull") {
    return WeibullBaseline{j.at("lambda").get<double>(),
                           j.at("rho").get<double>()};
  }
  if (kind == "step") {
    return StepBaseline(j.at("times").get<std::vector<double>>(),
                        j.at("increments").get<std::vector<double>>());
  }
  throw DataError("read_result: unknown baseline kind '" + kind + "'");
}

json result_to_json(const FitResult& fit) {
  json j;
  j["model"] = "shared-wl-frailty";
  json coeffs = json::array();
  for (int k = 0; k < fit.beta_hat.size(); ++k) {
    const double est = fit.beta_hat(k);
    const double se = fit.se_beta.size() > k ? fit.se_beta(k) : 0.0;
    const double z = se > 0.0 ? est / se : 0.0;
    coeffs.push_back({{"name", fit.covariate_names[static_cast<std::size_t>(k)]},
                      {"estimate", est},
                      {"se", se},
                      {"z", z},
                      {"p", se > 0.0 ? normal_two_sided_p(z) : 1.0}});
  }
  j["coefficients"] = coeffs;
  j["theta"] = {{"estimate", fit.theta_hat}, {"se", fit.se_theta}};
  j["kendall_tau"] = fit.kendall_tau;
  j["baseline"] = baseline_to_json(fit.baseline_hat);
  json frailties = json::array();
  for (std::size_t i = 0; i < fit.z_hat.size(); ++i) {
    frailties.push_back({{"cluster_id", fit.cluster_ids[i]},
                         {"z_hat", fit.z_hat[i]},
                         {"kappa_hat", fit.kappa_hat[i]}});
  }
  j["frailties"] = frailties;
  j["loglik"] = fit.loglik_trace.empty() ? 0.0 : fit.loglik_trace.back();
  j["loglik_trace"] = fit.loglik_trace;
  j["n_iter"] = fit.n_iter;
  j["warnings"] = fit.warnings;
  return j;
}

}  // namespace

std::string result_to_json_string(const FitResult& fit) {
  return result_to_json(fit).dump(2) + "\n";
}

void write_result(const FitResult& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("write_result: cannot open '" + path + "' for writing");
  }
  out << result_to_json_string(fit);
  if (!out) {
    throw DataError("write_result: failed writing '" + path + "'");
  }
}

FitResult read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("read_result: cannot open '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("read_result: invalid JSON in '" + path + "': " + e.what());
  }
  try {
    FitResult fit;
    const auto& coeffs = j.at("coefficients");
    fit.beta_hat.resize(static_cast<Eigen::Index>(coeffs.size()));
    fit.se_beta.resize(static_cast<Eigen::Index>(coeffs.size()));
    Eigen::Index k = 0;
    for (const auto& c : coeffs) {
      fit.covariate_names.push_back(c.at("name").get<std::string>());
      fit.beta_hat(k) = c.at("estimate").get<double>();
      fit.se_beta(k) = c.at("se").get<double>();
      ++k;
    }
    fit.theta_hat = j.at("theta").at("estimate").get<double>();
    fit.se_theta = j.at("theta").at("se").get<double>();
    fit.kendall_tau = j.at("kendall_tau").get<double>();
    fit.baseline_hat = baseline_from_json(j.at("baseline"));
    for (const auto& f : j.at("frailties")) {
      fit.cluster_ids.push_back(f.at("cluster_id").get<std::string>());
      fit.z_hat.push_back(f.at("z_hat").get<double>());
      fit.kappa_hat.push_back(f.at("kappa_hat").get<double>());
    }
    fit.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    fit.n_iter = j.at("n_iter").get<int>();
    fit.warnings = j.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const json::exception& e) {
    throw DataError("read_result: missing or malformed field in '" + path +
                    "': " + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("load_scenario: cannot open '" + path + "'");
  }
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("load_scenario: line " + std::to_string(line_no) +
                      ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto bad = [&](const std::string& what) {
      return DataError("load_scenario: line " + std::to_string(line_no) +
                       ": " + what + " ('" + value + "')");
    };
    if (key == "layout") {
      cfg.cluster_layout.clear();
      std::string normalized = value;
      std::replace(normalized.begin(), normalized.end(), ',', ' ');
      std::stringstream ss(normalized);
      std::string entry;
      while (ss >> entry) {
        const auto x = entry.find('x');
        if (x == std::string::npos) throw bad("layout entries are COUNTxSIZE");
        try {
          cfg.cluster_layout.emplace_back(std::stoi(entry.substr(0, x)),
                                          std::stoi(entry.substr(x + 1)));
        } catch (const std::exception&) {
          throw bad("layout entries are COUNTxSIZE");
        }
      }
      if (cfg.cluster_layout.empty()) throw bad("empty layout");
    } else if (key == "mu_w") {
      if (!parse_double(value, &cfg.mu_w)) throw bad("invalid mu_w");
    } else if (key == "sigma2_w") {
      if (!parse_double(value, &cfg.sigma2_w)) throw bad("invalid sigma2_w");
    } else if (key == "theta") {
      if (!parse_double(value, &cfg.theta)) throw bad("invalid theta");
    } else if (key == "frailty") {
      if (value == "wl") {
        cfg.frailty_law = FrailtyLaw::wl;
      } else if (value == "uniform") {
        cfg.frailty_law = FrailtyLaw::uniform_0_2;
      } else if (value == "gamma") {
        cfg.frailty_law = FrailtyLaw::gamma_1_1;
      } else if (value == "lognormal") {
        cfg.frailty_law = FrailtyLaw::lognormal_half;
      } else {
        throw bad("frailty must be wl|uniform|gamma|lognormal");
      }
    } else if (key == "beta") {
      std::string normalized = value;
      std::replace(normalized.begin(), normalized.end(), ',', ' ');
      std::stringstream ss(normalized);
      std::vector<double> vals;
      std::string tok;
      while (ss >> tok) {
        double v;
        if (!parse_double(tok, &v)) throw bad("invalid beta entry");
        vals.push_back(v);
      }
      cfg.beta = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                             static_cast<Eigen::Index>(vals.size()));
    } else if (key == "censor_q") {
      if (!parse_double(value, &cfg.censor_q)) throw bad("invalid censor_q");
    } else if (key == "replicates") {
      try {
        cfg.n_replicates = std::stoi(value);
      } catch (const std::exception&) {
        throw bad("invalid replicates");
      }
    } else if (key == "seed") {
      try {
        cfg.base_seed = std::stoull(value);
      } catch (const std::exception&) {
        throw bad("invalid seed");
      }
    } else {
      throw DataError("load_scenario: line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void write_metrics(const MetricsSummary& summary, const ScenarioConfig& cfg,
                   FitterKind fitter, const std::string& path) {
  json j;
  const char* law = nullptr;
  switch (cfg.frailty_law) {
    case FrailtyLaw::wl: law = "wl"; break;
    case FrailtyLaw::uniform_0_2: law = "uniform"; break;
    case FrailtyLaw::gamma_1_1: law = "gamma"; break;
    case FrailtyLaw::lognormal_half: law = "lognormal"; break;
  }
  json layout = json::array();
  for (const auto& [count, size] : cfg.cluster_layout) {
    layout.push_back({{"count", count}, {"size", size}});
  }
  j["scenario"] = {{"layout", layout},
                   {"mu_w", cfg.mu_w},
                   {"sigma2_w", cfg.sigma2_w},
                   {"theta", cfg.theta},
                   {"frailty", law},
                   {"censor_q", cfg.censor_q},
                   {"replicates", cfg.n_replicates},
                   {"seed", cfg.base_seed}};
  j["fitter"] = fitter == FitterKind::semiparametric ? "np" : "weibull";
  j["replicates_failed"] = summary.n_failed;
  json params = json::array();
  for (const auto& pm : summary.parameters) {
    params.push_back({{"name", pm.name},
                      {"truth", pm.truth},
                      {"bias", pm.bias},
                      {"mean_se", pm.mean_se},
                      {"rmse", pm.rmse},
                      {"empirical_sd", pm.empirical_sd}});
  }
  j["parameters"] = params;
  const auto baseline_json = [](const BaselineMetric& bm) {
    return json{{"truth", bm.truth},
                {"B", bm.metrics.B},
                {"B_SD", bm.metrics.B_SD},
                {"RB", bm.metrics.RB},
                {"RB_SD", bm.metrics.RB_SD},
                {"n_valid", bm.n_valid}};
  };
  j["baseline"] = {{"mu_w", baseline_json(summary.mu_w)},
                   {"xi_w", baseline_json(summary.xi_w)}};
  std::ofstream out(path);
  if (!out) {
    throw DataError("write_metrics: cannot open '" + path + "' for writing");
  }
  out << j.dump(2) << "\n";
}

void write_curve_csv(const SurvivalCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("write_curve_csv: cannot open '" + path + "' for writing");
  }
  out << "time,survival\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << format_g17(curve.grid[i]) << ',' << format_g17(curve.values[i])
        << '\n';
  }
}

}  // namespace wlfrail
