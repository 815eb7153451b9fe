#pragma once

/**
 * @file cli_reporter.hpp
 * @brief Command implementations behind the `stochdisc` executable.
 *
 * Each command returns its results in memory and writes its files into an
 * output directory, so the same code path is exercised by tests and by the
 * CLI. Numbers in files use the shortest round-trip representation.
 */

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stochdisc/estimator.hpp"
#include "stochdisc/mc_engine.hpp"

namespace stochdisc::cli {

enum class OutputFormat { Csv, Json };
enum class CurveEngine { ClosedForm, MonteCarlo, Both };

OutputFormat parse_format(const std::string& text);
CurveEngine parse_engine(const std::string& text);

/// Shortest representation that parses back to the same double; "nan"/"inf" otherwise.
std::string format_number(double x);

/// Two significant digits, as in the printed country table.
std::string format_rounded(double x);

struct CountrySpec {
  std::string name;
  std::filesystem::path nominal_csv;
  std::filesystem::path cpi_csv;
};

struct RunConfig {
  std::vector<CountrySpec> countries;
  double inflation_window = data::kDefaultInflationWindow;
  est::EstimatorOptions estimator;
  mc::McConfig mc;
  CurveEngine curve_engine = CurveEngine::ClosedForm;
  double horizon = 100.0;
  std::size_t curve_points = 101;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::Json;
};

/// Key-value text: `key = value` lines, `#` comments, and one
/// `country.<NAME> = <nominal.csv>, <cpi.csv>` line per country. Relative
/// paths are resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json report_to_json(const est::EstimationReport& report);
est::EstimationReport report_from_json(const nlohmann::json& j);

struct AggregateRow {
  std::string label;  ///< "all countries", "stable" or "unstable"
  std::vector<std::string> countries;
  std::vector<std::string> ties;  ///< |r_inf| within tolerance, counted as stable
  double neg_fraction = 0.0;
  double neg_years = 0.0;
  double mean_negative_amplitude = 0.0;
  double m = 0.0;
  double inv_alpha = 0.0;
  double k = 0.0;
  double mu = 0.0, mu_min = 0.0, mu_max = 0.0;
  double kappa = 0.0, kappa_min = 0.0, kappa_max = 0.0;
  double r_inf = 0.0, r_inf_min = 0.0, r_inf_max = 0.0;
};

/// Means over all, stable (r_inf >= -tol) and unstable (r_inf < -tol) reports.
std::vector<AggregateRow> aggregate_rows(const std::vector<est::EstimationReport>& reports, double tol);

nlohmann::json aggregate_to_json(const AggregateRow& row);

/// Human-readable country table with rounded percentages.
std::string format_table(const std::vector<est::EstimationReport>& reports, const std::vector<AggregateRow>& aggregates);

struct FitOutcome {
  std::vector<est::EstimationReport> reports;
  std::vector<std::pair<std::string, std::string>> failures;  ///< (country, error)
  std::vector<std::string> warnings;
  int exit_code = 0;  ///< 0 all ok, 2 partial, 1 none succeeded
};

FitOutcome cmd_fit(const RunConfig& config);

struct CurveRequest {
  rates::ModelKind model = rates::OuParams{};
  double t_max = 100.0;
  std::size_t points = 101;
  CurveEngine engine = CurveEngine::ClosedForm;
  mc::McConfig mc;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::Csv;
  std::string stem = "curve";
};

struct CurveOutcome {
  std::optional<mc::DiscountCurve> closed_form;
  std::optional<mc::DiscountCurve> monte_carlo;
  std::optional<double> max_abs_z;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

CurveOutcome cmd_curve(const CurveRequest& request);

/// OU parameters of a fitted report, starting at the fitted mean.
rates::OuParams params_from_report(const est::EstimationReport& report);

struct PhaseRow {
  std::string country;
  double kappa = 0.0;
  double mu = 0.0;
  double r_inf = 0.0;
  ou::Regime regime = ou::Regime::AsymptoticallyConstant;
  bool below_identity = false;
};

std::vector<PhaseRow> phase_rows(const std::vector<est::EstimationReport>& reports, double tol);

/// Loads every `*.report.json` in `dir`, sorted by file name.
std::vector<est::EstimationReport> load_reports(const std::filesystem::path& dir);

std::vector<PhaseRow> cmd_phase(const std::filesystem::path& reports_dir, const std::filesystem::path& out_dir,
                                OutputFormat format, double tol);

struct NegProbRow {
  double kappa = 0.0;
  double mu = 0.0;
  double p_negative = 0.0;
};

/// kappa = i kappa_max / steps (i = 1..steps), mu = j mu_max / steps (j = 0..steps).
std::vector<NegProbRow> negprob_grid(double kappa_max, double mu_max, std::size_t steps);

std::vector<NegProbRow> cmd_negprob(double kappa_max, double mu_max, std::size_t steps,
                                    const std::filesystem::path& out_dir, OutputFormat format);

std::string curve_to_csv(const mc::DiscountCurve& curve);
nlohmann::json curve_to_json(const mc::DiscountCurve& curve);

}  // namespace stochdisc::cli
