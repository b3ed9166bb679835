#pragma once

#include <string>
#include <vector>

#include "wlfrail/em.hpp"
#include "wlfrail/simulation.hpp"
#include "wlfrail/survival_data.hpp"

namespace wlfrail {

struct CsvSpec {
  std::string time_col;
  std::string status_col;
  std::string cluster_col;
  std::vector<std::string> covariate_cols;
};

/// Loads a comma-separated file with a header row. Rows are grouped by the
/// cluster column preserving file order within clusters; covariate columns
/// whose values are not all numeric are expanded to reference-coded dummies
/// (first level in alphabetical order is the reference, dummy names are
/// column name + level). Throws DataError with the offending line number.
Dataset load_csv(const std::string& path, const CsvSpec& spec);

/// Debug dump: cluster,time,status followed by the covariate columns,
/// numerics at 17 significant digits.
std::string dump_csv(const Dataset& data);

/// Two-sided normal p-value of a z statistic.
double normal_two_sided_p(double z);

/// Serialized fit: coefficients (name/estimate/se/z/p), theta, Kendall's tau,
/// baseline (kind + parameters or step arrays), per-cluster frailties,
/// log-likelihood and iteration count. Round-trips through read_result.
void write_result(const FitResult& fit, const std::string& path);
std::string result_to_json_string(const FitResult& fit);
FitResult read_result(const std::string& path);

/// Plain key = value scenario file; keys: layout (COUNTxSIZE list), mu_w,
/// sigma2_w, theta, frailty (wl|uniform|gamma|lognormal), beta (list),
/// censor_q, replicates, seed. '#' starts a comment.
ScenarioConfig load_scenario(const std::string& path);

void write_metrics(const MetricsSummary& summary, const ScenarioConfig& cfg,
                   FitterKind fitter, const std::string& path);

/// Writes a survival curve as CSV (time,survival).
void write_curve_csv(const SurvivalCurve& curve, const std::string& path);

}  // namespace wlfrail
