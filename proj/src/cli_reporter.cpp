#include "stochdisc/cli_reporter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include "stochdisc/errors.hpp"

namespace stochdisc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char c : name) out.push_back(std::isalnum(c) ? static_cast<char>(c) : '_');
  return out.empty() ? "unnamed" : out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

double json_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}

json range_json(const est::Range& r) { return {{"min", r.min}, {"max", r.max}}; }

est::Range range_from(const json& j) { return {json_number(j, "min"), json_number(j, "max")}; }

double mean_of(const std::vector<const est::EstimationReport*>& rs, double (*get)(const est::EstimationReport&)) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto* r : rs) {
    const double v = get(*r);
    if (std::isfinite(v)) {
      s += v;
      ++n;
    }
  }
  return n > 0 ? s / static_cast<double>(n) : kNaN;
}

AggregateRow make_aggregate(std::string label, const std::vector<const est::EstimationReport*>& rs) {
  AggregateRow row;
  row.label = std::move(label);
  for (const auto* r : rs) row.countries.push_back(r->country);
  using R = const est::EstimationReport&;
  row.neg_fraction = mean_of(rs, [](R r) { return r.neg_fraction_empirical; });
  row.neg_years = mean_of(rs, [](R r) { return r.neg_years_empirical; });
  row.mean_negative_amplitude = mean_of(rs, [](R r) { return r.mean_negative_amplitude; });
  row.m = mean_of(rs, [](R r) { return r.m_hat; });
  row.inv_alpha = mean_of(rs, [](R r) { return 1.0 / r.alpha_hat; });
  row.k = mean_of(rs, [](R r) { return r.k_hat; });
  row.mu = mean_of(rs, [](R r) { return r.mu_hat; });
  row.mu_min = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.mu_range.min; });
  row.mu_max = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.mu_range.max; });
  row.kappa = mean_of(rs, [](R r) { return r.kappa_hat; });
  row.kappa_min = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.kappa_range.min; });
  row.kappa_max = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.kappa_range.max; });
  row.r_inf = mean_of(rs, [](R r) { return r.r_inf_hat; });
  row.r_inf_min = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.r_inf_range.min; });
  row.r_inf_max = mean_of(rs, [](R r) { return r.blocks.empty() ? kNaN : r.r_inf_range.max; });
  return row;
}

std::string pct(double x) { return std::isfinite(x) ? format_rounded(100.0 * x) : "-"; }
std::string plain(double x) { return std::isfinite(x) ? format_rounded(x) : "-"; }

std::string neg_ri(double fraction, double years) {
  std::ostringstream os;
  os << std::llround(100.0 * fraction) << "% (" << std::llround(years) << "y)";
  return os.str();
}

void csv_line(std::ostringstream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) os << ',';
    os << f;
    first = false;
  }
  os << '\n';
}

}  // namespace

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw ParseError("unknown output format '" + text + "' (expected csv or json)");
}

CurveEngine parse_engine(const std::string& text) {
  if (text == "closed-form") return CurveEngine::ClosedForm;
  if (text == "mc") return CurveEngine::MonteCarlo;
  if (text == "both") return CurveEngine::Both;
  throw ParseError("unknown engine '" + text + "' (expected closed-form, mc or both)");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_rounded(double x) {
  if (!std::isfinite(x)) return format_number(x);
  if (x == 0.0) return "0.0";
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(x))));
  const int decimals = std::max(0, 1 - exponent);
  const double scale = std::pow(10.0, 1 - exponent);
  double rounded = std::round(x * scale) / scale;
  if (rounded == 0.0) rounded = 0.0;  // drop negative zero
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << rounded;
  return os.str();
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  const auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key.rfind("country.", 0) == 0) {
      const auto comma = value.find(',');
      if (comma == std::string::npos) {
        throw ParseError("config line " + std::to_string(line_no) + ": country needs '<nominal.csv>, <cpi.csv>'");
      }
      cfg.countries.push_back({trim(key.substr(8)), resolve(trim(value.substr(0, comma))),
                               resolve(trim(value.substr(comma + 1)))});
    } else if (key == "T") {
      cfg.inflation_window = to_double(key, value);
    } else if (key == "max_lag") {
      cfg.estimator.max_lag_years = to_double(key, value);
    } else if (key == "blocks") {
      cfg.estimator.n_blocks = to_uint(key, value);
    } else if (key == "regime_tol") {
      cfg.estimator.regime_tolerance = to_double(key, value);
    } else if (key == "horizon") {
      cfg.horizon = to_double(key, value);
    } else if (key == "curve_points") {
      cfg.curve_points = to_uint(key, value);
    } else if (key == "curve_engine") {
      cfg.curve_engine = parse_engine(value);
    } else if (key == "mc_paths") {
      cfg.mc.n_paths = to_uint(key, value);
    } else if (key == "mc_dt") {
      cfg.mc.dt = to_double(key, value);
    } else if (key == "mc_batch") {
      cfg.mc.batch_size = to_uint(key, value);
    } else if (key == "mc_max_steps") {
      cfg.mc.max_path_steps = to_double(key, value);
    } else if (key == "seed") {
      cfg.mc.seed = to_uint(key, value);
    } else if (key == "format") {
      cfg.format = parse_format(value);
    } else if (key == "out") {
      cfg.out_dir = resolve(value);
    } else {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!(cfg.horizon > 0.0)) throw ParseError("config: horizon must be > 0");
  if (cfg.curve_points < 2) throw ParseError("config: curve_points must be >= 2");
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  return parse_run_config(in, path.parent_path());
}

json report_to_json(const est::EstimationReport& r) {
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"t_start", b.t_start}, {"t_end", b.t_end}, {"m", b.m}, {"sigma2", b.sigma2},
                      {"k", b.k}, {"mu", b.mu}, {"kappa", b.kappa}, {"r_inf", b.r_inf}});
  }
  json j = json::object();
  j["country"] = r.country;
  j["n_samples"] = r.n_samples;
  j["dt"] = r.dt;
  j["t_start"] = r.t_start;
  j["t_end"] = r.t_end;
  j["span_years"] = r.span_years;
  j["max_lag_years"] = r.max_lag_years;
  j["m_hat"] = r.m_hat;
  j["alpha_hat"] = r.alpha_hat;
  j["inv_alpha_hat"] = 1.0 / r.alpha_hat;
  j["alpha_stderr"] = r.alpha_stderr;
  j["sigma2_hat"] = r.sigma2_hat;
  j["k_hat"] = r.k_hat;
  j["mu_hat"] = r.mu_hat;
  j["kappa_hat"] = r.kappa_hat;
  j["r_inf_hat"] = r.r_inf_hat;
  j["regime"] = std::string(ou::to_string(r.regime.regime));
  j["regime_tolerance"] = r.regime.tolerance;
  j["prob_negative_model"] = r.prob_negative_model;
  j["prob_below_r_inf_model"] = r.prob_below_r_inf_model;
  j["neg_fraction_empirical"] = r.neg_fraction_empirical;
  j["neg_years_empirical"] = r.neg_years_empirical;
  j["mean_negative_amplitude"] = r.mean_negative_amplitude;
  j["blocks"] = std::move(blocks);
  j["mu_range"] = range_json(r.mu_range);
  j["kappa_range"] = range_json(r.kappa_range);
  j["r_inf_range"] = range_json(r.r_inf_range);
  j["degenerate"] = r.degenerate;
  j["warnings"] = r.warnings;
  return j;
}

est::EstimationReport report_from_json(const json& j) {
  est::EstimationReport r;
  r.country = j.at("country").get<std::string>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.dt = json_number(j, "dt");
  r.t_start = json_number(j, "t_start");
  r.t_end = json_number(j, "t_end");
  r.span_years = json_number(j, "span_years");
  r.max_lag_years = json_number(j, "max_lag_years");
  r.m_hat = json_number(j, "m_hat");
  r.alpha_hat = json_number(j, "alpha_hat");
  r.alpha_stderr = json_number(j, "alpha_stderr");
  r.sigma2_hat = json_number(j, "sigma2_hat");
  r.k_hat = json_number(j, "k_hat");
  r.mu_hat = json_number(j, "mu_hat");
  r.kappa_hat = json_number(j, "kappa_hat");
  r.r_inf_hat = json_number(j, "r_inf_hat");
  const auto regime = ou::parse_regime(j.at("regime").get<std::string>());
  if (!regime) throw ParseError("report: unknown regime label");
  r.regime = {*regime, json_number(j, "regime_tolerance")};
  r.prob_negative_model = json_number(j, "prob_negative_model");
  r.prob_below_r_inf_model = json_number(j, "prob_below_r_inf_model");
  r.neg_fraction_empirical = json_number(j, "neg_fraction_empirical");
  r.neg_years_empirical = json_number(j, "neg_years_empirical");
  r.mean_negative_amplitude = json_number(j, "mean_negative_amplitude");
  for (const auto& b : j.at("blocks")) {
    r.blocks.push_back({json_number(b, "t_start"), json_number(b, "t_end"), json_number(b, "m"),
                        json_number(b, "sigma2"), json_number(b, "k"), json_number(b, "mu"),
                        json_number(b, "kappa"), json_number(b, "r_inf")});
  }
  r.mu_range = range_from(j.at("mu_range"));
  r.kappa_range = range_from(j.at("kappa_range"));
  r.r_inf_range = range_from(j.at("r_inf_range"));
  r.degenerate = j.at("degenerate").get<bool>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<est::EstimationReport>& reports, double tol) {
  std::vector<const est::EstimationReport*> all, stable, unstable;
  std::vector<std::string> ties;
  for (const auto& r : reports) {
    all.push_back(&r);
    if (r.r_inf_hat < -tol) {
      unstable.push_back(&r);
    } else {
      stable.push_back(&r);
      if (std::abs(r.r_inf_hat) <= tol) ties.push_back(r.country);
    }
  }
  std::vector<AggregateRow> rows;
  rows.push_back(make_aggregate("all countries", all));
  rows.push_back(make_aggregate("stable", stable));
  rows.back().ties = ties;
  rows.push_back(make_aggregate("unstable", unstable));
  return rows;
}

json aggregate_to_json(const AggregateRow& row) {
  return {{"label", row.label},
          {"countries", row.countries},
          {"ties", row.ties},
          {"neg_fraction_empirical", row.neg_fraction},
          {"neg_years_empirical", row.neg_years},
          {"mean_negative_amplitude", row.mean_negative_amplitude},
          {"m_hat", row.m},
          {"inv_alpha_hat", row.inv_alpha},
          {"k_hat", row.k},
          {"mu_hat", row.mu},
          {"mu_min", row.mu_min},
          {"mu_max", row.mu_max},
          {"kappa_hat", row.kappa},
          {"kappa_min", row.kappa_min},
          {"kappa_max", row.kappa_max},
          {"r_inf_hat", row.r_inf},
          {"r_inf_min", row.r_inf_min},
          {"r_inf_max", row.r_inf_max}};
}

std::string format_table(const std::vector<est::EstimationReport>& reports,
                         const std::vector<AggregateRow>& aggregates) {
  std::ostringstream os;
  const auto row = [&os](const std::vector<std::string>& cells) {
    static constexpr int widths[] = {16, 12, 8, 7, 6, 9, 7, 7, 7, 7, 7, 7, 8, 8, 8};
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << std::left << std::setw(widths[i]) << cells[i];
    }
    os << '\n';
  };
  row({"Country", "Neg RI", "m(-)%", "m%", "1/a", "k(x100)", "mu", "Min", "Max", "kappa", "Min", "Max", "r_inf%",
       "Min", "Max"});
  for (const auto& r : reports) {
    const bool b = !r.blocks.empty();
    const double nan = kNaN;
    row({r.country, neg_ri(r.neg_fraction_empirical, r.neg_years_empirical), pct(r.mean_negative_amplitude),
         pct(r.m_hat), plain(1.0 / r.alpha_hat), pct(r.k_hat), plain(r.mu_hat), plain(b ? r.mu_range.min : nan),
         plain(b ? r.mu_range.max : nan), plain(r.kappa_hat), plain(b ? r.kappa_range.min : nan),
         plain(b ? r.kappa_range.max : nan), pct(r.r_inf_hat), pct(b ? r.r_inf_range.min : nan),
         pct(b ? r.r_inf_range.max : nan)});
  }
  for (const auto& a : aggregates) {
    if (a.countries.empty()) continue;
    row({a.label, neg_ri(a.neg_fraction, a.neg_years), pct(a.mean_negative_amplitude), pct(a.m), plain(a.inv_alpha),
         pct(a.k), plain(a.mu), plain(a.mu_min), plain(a.mu_max), plain(a.kappa), plain(a.kappa_min),
         plain(a.kappa_max), pct(a.r_inf), pct(a.r_inf_min), pct(a.r_inf_max)});
  }
  return os.str();
}

std::string curve_to_csv(const mc::DiscountCurve& curve) {
  std::ostringstream os;
  os << "t,D,stderr,lnD\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    csv_line(os, {format_number(curve.times[i]), format_number(curve.d_values[i]),
                  format_number(curve.std_errors[i]), format_number(curve.log_d_values[i])});
  }
  return os.str();
}

json curve_to_json(const mc::DiscountCurve& curve) {
  json model = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, rates::LognormalParams>) {
          return {{"a", p.a}, {"b", p.b}, {"r0", p.r0}};
        } else {
          return {{"m", p.m}, {"alpha", p.alpha}, {"k", p.k}, {"r0", p.r0}};
        }
      },
      curve.model);
  model["kind"] = std::string(rates::model_name(curve.model));
  return {{"source", std::string(mc::to_string(curve.source))},
          {"model", model},
          {"saturated", curve.saturated},
          {"t", curve.times},
          {"D", curve.d_values},
          {"stderr", curve.std_errors},
          {"lnD", curve.log_d_values}};
}

rates::OuParams params_from_report(const est::EstimationReport& report) {
  if (report.degenerate || !(report.alpha_hat > 0.0)) {
    throw DomainError(report.country + ": report has no usable OU fit");
  }
  return {report.m_hat, report.alpha_hat, report.k_hat, report.m_hat};
}

CurveOutcome cmd_curve(const CurveRequest& request) {
  const auto model = rates::validate(request.model);
  if (!(request.t_max > 0.0)) throw DomainError("curve: tmax must be > 0");
  if (request.points < 2) throw DomainError("curve: need at least 2 points");
  const auto times = mc::uniform_times(request.t_max, request.points);
  const bool want_cf = request.engine != CurveEngine::MonteCarlo;
  const bool want_mc = request.engine != CurveEngine::ClosedForm;

  CurveOutcome out;
  std::ostringstream summary;
  const auto emit = [&](const mc::DiscountCurve& curve, const std::string& suffix) {
    const bool csv = request.format == OutputFormat::Csv;
    const fs::path path = request.out_dir / (request.stem + "_" + suffix + (csv ? ".csv" : ".json"));
    write_file(path, csv ? curve_to_csv(curve) : curve_to_json(curve).dump(2) + "\n");
    out.files.push_back(path);
  };

  if (want_cf) {
    const auto* ou = std::get_if<rates::OuParams>(&model.kind());
    if (!ou) throw DomainError("curve: the closed form exists only for the OU model");
    out.closed_form = mc::closed_form_curve(*ou, times);
    emit(*out.closed_form, "closed_form");
    summary << "r_inf=" << format_number(ou::r_infinity(*ou)) << '\n';
  }
  if (want_mc) {
    mc::McConfig cfg = request.mc;
    // Snap dt so that every output time is a whole number of steps.
    const double spacing = request.t_max / static_cast<double>(request.points - 1);
    const double substeps = std::max(1.0, std::ceil(spacing / cfg.dt - 1e-9));
    cfg.dt = spacing / substeps;
    cfg.horizon = request.t_max;
    std::vector<double> snapped(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) snapped[i] = static_cast<double>(i) * substeps * cfg.dt;
    out.monte_carlo = mc::estimate_discount(model, cfg, snapped);
    out.monte_carlo->times = times;
    emit(*out.monte_carlo, "monte_carlo");
    for (const auto& w : out.monte_carlo->warnings) summary << "warning: " << w << '\n';
  }
  if (out.closed_form && out.monte_carlo) {
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double diff = std::abs(out.monte_carlo->d_values[i] - out.closed_form->d_values[i]);
      const double se = out.monte_carlo->std_errors[i];
      if (se > 0.0) {
        worst = std::max(worst, diff / se);
      } else if (diff > 1e-12 * std::max(1.0, out.closed_form->d_values[i])) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
    out.max_abs_z = worst;
    summary << "max_abs_z=" << format_number(worst) << '\n';
  }
  const auto& longrun_source = out.monte_carlo ? *out.monte_carlo : *out.closed_form;
  if (longrun_source.size() >= 30) {
    const auto lr = mc::classify_longrun_empirical(longrun_source);
    summary << "longrun_rate=" << format_number(lr.rate) << " regime=" << ou::to_string(lr.label.regime)
            << (lr.inconclusive ? " (inconclusive)" : "") << '\n';
  }
  out.summary = summary.str();
  const fs::path summary_path = request.out_dir / (request.stem + "_summary.txt");
  write_file(summary_path, out.summary);
  out.files.push_back(summary_path);
  return out;
}

FitOutcome cmd_fit(const RunConfig& config) {
  FitOutcome outcome;
  if (config.countries.empty()) {
    outcome.exit_code = 1;
    outcome.failures.emplace_back("", "no countries configured");
    return outcome;
  }

  struct CountryResult {
    std::optional<est::EstimationReport> report;
    std::string error;
    std::vector<std::string> warnings;
  };

  const auto process = [&config](const CountrySpec& spec) {
    CountryResult res;
    try {
      auto nominal = data::read_series_csv(spec.nominal_csv, data::SeriesKind::NominalOpenRate, spec.name);
      auto cpi = data::read_series_csv(spec.cpi_csv, data::SeriesKind::CpiIndex, spec.name);
      res.warnings = nominal.warnings;
      res.warnings.insert(res.warnings.end(), cpi.warnings.begin(), cpi.warnings.end());
      const auto series = data::real_rate_series(nominal.series, cpi.series, config.inflation_window);
      auto report = est::build_report(series, config.estimator);
      report.warnings.insert(report.warnings.end(), res.warnings.begin(), res.warnings.end());

      const fs::path stem = config.out_dir / slug(spec.name);
      write_file(stem.string() + ".report.json", report_to_json(report).dump(2) + "\n");
      if (!report.degenerate) {
        CurveRequest curve;
        curve.model = params_from_report(report);
        curve.t_max = config.horizon;
        curve.points = config.curve_points;
        curve.engine = config.curve_engine;
        curve.mc = config.mc;
        curve.out_dir = config.out_dir;
        curve.format = config.format;
        curve.stem = slug(spec.name) + ".curve";
        cmd_curve(curve);
      }
      res.report = std::move(report);
    } catch (const std::exception& e) {
      res.error = e.what();
    }
    return res;
  };

  std::vector<std::future<CountryResult>> jobs;
  for (const auto& spec : config.countries) jobs.push_back(std::async(std::launch::async, process, std::cref(spec)));

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto res = jobs[i].get();
    if (res.report) {
      outcome.warnings.insert(outcome.warnings.end(), res.report->warnings.begin(), res.report->warnings.end());
      outcome.reports.push_back(std::move(*res.report));
    } else {
      outcome.failures.emplace_back(config.countries[i].name, res.error);
    }
  }

  const double tol = config.estimator.regime_tolerance;
  const auto aggregates = aggregate_rows(outcome.reports, tol);
  json summary = json::object();
  summary["countries"] = json::array();
  for (const auto& r : outcome.reports) summary["countries"].push_back(r.country);
  summary["aggregates"] = json::array();
  for (const auto& a : aggregates) summary["aggregates"].push_back(aggregate_to_json(a));
  summary["failures"] = json::array();
  for (const auto& [country, error] : outcome.failures) {
    summary["failures"].push_back({{"country", country}, {"error", error}});
  }
  write_file(config.out_dir / "summary.json", summary.dump(2) + "\n");
  write_file(config.out_dir / "table.txt", format_table(outcome.reports, aggregates));
  if (config.format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "label,m_hat,inv_alpha_hat,k_hat,mu_hat,kappa_hat,r_inf_hat,neg_fraction_empirical\n";
    const auto line = [&os](const std::string& label, double m, double ia, double k, double mu, double kappa,
                            double rinf, double neg) {
      csv_line(os, {label, format_number(m), format_number(ia), format_number(k), format_number(mu),
                    format_number(kappa), format_number(rinf), format_number(neg)});
    };
    for (const auto& r : outcome.reports) {
      line(r.country, r.m_hat, 1.0 / r.alpha_hat, r.k_hat, r.mu_hat, r.kappa_hat, r.r_inf_hat,
           r.neg_fraction_empirical);
    }
    for (const auto& a : aggregates) line(a.label, a.m, a.inv_alpha, a.k, a.mu, a.kappa, a.r_inf, a.neg_fraction);
    write_file(config.out_dir / "summary.csv", os.str());
  }

  if (outcome.reports.empty()) {
    outcome.exit_code = 1;
  } else if (!outcome.failures.empty()) {
    outcome.exit_code = 2;
  }
  return outcome;
}

std::vector<PhaseRow> phase_rows(const std::vector<est::EstimationReport>& reports, double tol) {
  std::vector<PhaseRow> rows;
  for (const auto& r : reports) {
    PhaseRow row;
    row.country = r.country;
    row.kappa = r.kappa_hat;
    row.mu = r.mu_hat;
    row.r_inf = r.r_inf_hat;
    row.regime = ou::classify_regime({r.mu_hat, r.kappa_hat, r.alpha_hat}, tol).regime;
    row.below_identity = r.mu_hat < r.kappa_hat;
    rows.push_back(row);
  }
  return rows;
}

std::vector<est::EstimationReport> load_reports(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 && name.ends_with(".report.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<est::EstimationReport> reports;
  for (const auto& f : files) {
    std::ifstream in(f);
    reports.push_back(report_from_json(json::parse(in)));
  }
  return reports;
}

std::vector<PhaseRow> cmd_phase(const fs::path& reports_dir, const fs::path& out_dir, OutputFormat format,
                                double tol) {
  const auto reports = load_reports(reports_dir);
  if (reports.empty()) throw InsufficientData("phase: no *.report.json files in " + reports_dir.string());
  const auto rows = phase_rows(reports, tol);
  if (format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "country,kappa,mu,r_inf,regime,below_identity\n";
    for (const auto& r : rows) {
      csv_line(os, {r.country, format_number(r.kappa), format_number(r.mu), format_number(r.r_inf),
                    std::string(ou::to_string(r.regime)), r.below_identity ? "true" : "false"});
    }
    write_file(out_dir / "phase.csv", os.str());
  } else {
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"country", r.country},
                   {"kappa", r.kappa},
                   {"mu", r.mu},
                   {"r_inf", r.r_inf},
                   {"regime", std::string(ou::to_string(r.regime))},
                   {"below_identity", r.below_identity}});
    }
    write_file(out_dir / "phase.json", j.dump(2) + "\n");
  }
  return rows;
}

std::vector<NegProbRow> negprob_grid(double kappa_max, double mu_max, std::size_t steps) {
  if (!(kappa_max > 0.0) || !(mu_max > 0.0)) throw DomainError("negprob: grid bounds must be positive");
  if (steps < 1) throw DomainError("negprob: steps must be >= 1");
  std::vector<NegProbRow> rows;
  rows.reserve(steps * (steps + 1));
  const double n = static_cast<double>(steps);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double kappa = kappa_max * static_cast<double>(i) / n;
    for (std::size_t j = 0; j <= steps; ++j) {
      const double mu = mu_max * static_cast<double>(j) / n;
      rows.push_back({kappa, mu, ou::prob_negative_stationary({mu, kappa, 1.0})});
    }
  }
  return rows;
}

std::vector<NegProbRow> cmd_negprob(double kappa_max, double mu_max, std::size_t steps, const fs::path& out_dir,
                                    OutputFormat format) {
  const auto rows = negprob_grid(kappa_max, mu_max, steps);
  if (format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "kappa,mu,p_negative\n";
    for (const auto& r : rows) csv_line(os, {format_number(r.kappa), format_number(r.mu), format_number(r.p_negative)});
    write_file(out_dir / "negprob.csv", os.str());
  } else {
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"kappa", r.kappa}, {"mu", r.mu}, {"p_negative", r.p_negative}});
    write_file(out_dir / "negprob.json", j.dump(2) + "\n");
  }
  return rows;
}

}  // namespace stochdisc::cli
