#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stochdisc/cli_reporter.hpp"
#include "stochdisc/errors.hpp"
#include "stochdisc/synthetic.hpp"
#include "table2.hpp"

using namespace stochdisc;
namespace fs = std::filesystem;
using rates::OuParams;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("stochdisc_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<double>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

cli::CountrySpec synthetic_country(const fs::path& dir, const std::string& name, const OuParams& p, double years,
                                   std::uint64_t seed) {
  synth::SyntheticCountry spec;
  spec.name = name;
  spec.params = p;
  spec.years = years;
  spec.seed = seed;
  const auto files = synth::write_synthetic_country(spec, dir);
  return {name, files.nominal_csv, files.cpi_csv};
}

est::EstimationReport nd_report(const std::string& name, double mu, double kappa, double alpha) {
  est::EstimationReport r;
  r.country = name;
  r.alpha_hat = alpha;
  r.mu_hat = mu;
  r.kappa_hat = kappa;
  r.m_hat = mu * alpha;
  r.k_hat = kappa * std::pow(alpha, 1.5);
  r.r_inf_hat = alpha * (mu - kappa * kappa / 2);
  return r;
}

const OuParams kUsa{0.026, 1.0 / 5.6, 0.018, 0.026};
const OuParams kChile{-0.068, 0.4, 0.25, -0.068};

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(cli::format_number(0.1), "0.1");
  EXPECT_EQ(cli::format_number(-2.5), "-2.5");
  EXPECT_EQ(cli::format_number(NAN), "nan");
  EXPECT_EQ(cli::format_number(INFINITY), "inf");
  std::mt19937_64 gen(61);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10'000; ++i) {
    const double x = std::ldexp(u(gen), static_cast<int>(u(gen) * 30));
    const auto s = cli::format_number(x);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    ASSERT_EQ(back, x) << s;
  }
}

TEST(FormatRounded, TableStyle) {
  EXPECT_EQ(cli::format_rounded(2.6), "2.6");
  EXPECT_EQ(cli::format_rounded(-26.008), "-26");
  EXPECT_EQ(cli::format_rounded(-163.1), "-160");
  EXPECT_EQ(cli::format_rounded(0.1456), "0.15");
  EXPECT_EQ(cli::format_rounded(2.0276785714), "2.0");
  EXPECT_EQ(cli::format_rounded(-6.1176), "-6.1");
}

TEST(Parse, FormatsAndEngines) {
  EXPECT_EQ(cli::parse_format("csv"), cli::OutputFormat::Csv);
  EXPECT_EQ(cli::parse_format("json"), cli::OutputFormat::Json);
  EXPECT_THROW(cli::parse_format("xml"), ParseError);
  EXPECT_EQ(cli::parse_engine("closed-form"), cli::CurveEngine::ClosedForm);
  EXPECT_EQ(cli::parse_engine("mc"), cli::CurveEngine::MonteCarlo);
  EXPECT_EQ(cli::parse_engine("both"), cli::CurveEngine::Both);
  EXPECT_THROW(cli::parse_engine("fast"), ParseError);
}

TEST(RunConfig, ParsesKeysAndCountries) {
  std::istringstream in(
      "# comment\n"
      "T = 5\n"
      "max_lag = 12\n"
      "regime_tol = 1e-6\n"
      "horizon = 50\n"
      "curve_engine = both\n"
      "mc_paths = 500\n"
      "seed = 9\n"
      "format = csv\n"
      "out = results\n"
      "country.USA = data/usa_nominal.csv, /abs/usa_cpi.csv\n");
  const auto cfg = cli::parse_run_config(in, "/base");
  EXPECT_EQ(cfg.inflation_window, 5.0);
  EXPECT_EQ(cfg.estimator.max_lag_years, 12.0);
  EXPECT_EQ(cfg.estimator.regime_tolerance, 1e-6);
  EXPECT_EQ(cfg.horizon, 50.0);
  EXPECT_EQ(cfg.curve_engine, cli::CurveEngine::Both);
  EXPECT_EQ(cfg.mc.n_paths, 500u);
  EXPECT_EQ(cfg.mc.seed, 9u);
  EXPECT_EQ(cfg.format, cli::OutputFormat::Csv);
  EXPECT_EQ(cfg.out_dir, fs::path("/base/results"));
  ASSERT_EQ(cfg.countries.size(), 1u);
  EXPECT_EQ(cfg.countries[0].name, "USA");
  EXPECT_EQ(cfg.countries[0].nominal_csv, fs::path("/base/data/usa_nominal.csv"));
  EXPECT_EQ(cfg.countries[0].cpi_csv, fs::path("/abs/usa_cpi.csv"));
}

TEST(RunConfig, RejectsBadInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return cli::parse_run_config(in, ".");
  };
  EXPECT_THROW(parse("colour = red\n"), ParseError);
  EXPECT_THROW(parse("T = ten\n"), ParseError);
  EXPECT_THROW(parse("horizon = 0\n"), ParseError);
  EXPECT_THROW(parse("country.X = only_one.csv\n"), ParseError);
  EXPECT_THROW(parse("no equals sign\n"), ParseError);
  EXPECT_THROW(cli::load_run_config("/nonexistent/config.cfg"), ParseError);
}

TEST(ReportJson, RoundTrip) {
  const auto d = synth::make_synthetic_country({.name = "X", .params = kUsa, .years = 150, .seed = 62});
  const auto rs = data::real_rate_series(d.nominal, d.cpi);
  const auto rep = est::build_report(rs);
  const auto j = cli::report_to_json(rep);
  const auto back = cli::report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.m_hat, rep.m_hat);
  EXPECT_EQ(back.alpha_hat, rep.alpha_hat);
  EXPECT_EQ(back.k_hat, rep.k_hat);
  EXPECT_EQ(back.r_inf_hat, rep.r_inf_hat);
  EXPECT_EQ(back.regime.regime, rep.regime.regime);
  EXPECT_EQ(back.blocks.size(), rep.blocks.size());
  EXPECT_EQ(back.r_inf_range.min, rep.r_inf_range.min);
  EXPECT_EQ(j.at("inv_alpha_hat").get<double>(), 1.0 / rep.alpha_hat);
  EXPECT_EQ(cli::report_to_json(back).dump(), j.dump());
}

TEST(ReportJson, NanBecomesNull) {
  std::vector<double> r(100, 0.02);
  std::vector<double> t(100);
  for (int i = 0; i < 100; ++i) t[i] = 1900 + i;
  const auto rep = est::build_report(data::make_rate_series(t, r, "Flat"));
  const auto j = nlohmann::json::parse(cli::report_to_json(rep).dump());
  EXPECT_TRUE(j.at("alpha_hat").is_null());
  EXPECT_TRUE(std::isnan(cli::report_from_json(j).alpha_hat));
  EXPECT_TRUE(j.at("degenerate").get<bool>());
}

TEST(Aggregates, PartitionByLongRunSign) {
  const std::vector<est::EstimationReport> reports{
      nd_report("A", 0.14, 0.23, 0.18), nd_report("B", -0.17, 0.98, 0.4), nd_report("C", 0.125, 0.5, 1.0)};
  const auto rows = cli::aggregate_rows(reports, 1e-9);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].label, "all countries");
  EXPECT_EQ(rows[0].countries.size(), 3u);
  EXPECT_EQ(rows[1].label, "stable");
  EXPECT_EQ(rows[1].countries, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(rows[1].ties, (std::vector<std::string>{"C"}));
  EXPECT_EQ(rows[2].label, "unstable");
  EXPECT_EQ(rows[2].countries, (std::vector<std::string>{"B"}));
  EXPECT_NEAR(rows[2].r_inf, reports[1].r_inf_hat, 1e-15);
  EXPECT_NEAR(rows[0].mu, (0.14 - 0.17 + 0.125) / 3, 1e-15);
}

TEST(CmdFit, StableAndUnstableCountries) {
  const auto dir = fresh_dir("fit");
  cli::RunConfig cfg;
  cfg.countries.push_back(synthetic_country(dir / "data", "U.S.A", kUsa, 193, 63));
  cfg.countries.push_back(synthetic_country(dir / "data", "Chile", kChile, 300, 64));
  cfg.out_dir = dir / "out";
  cfg.horizon = 50;
  cfg.curve_points = 51;
  const auto outcome = cli::cmd_fit(cfg);
  EXPECT_EQ(outcome.exit_code, 0);
  ASSERT_EQ(outcome.reports.size(), 2u);
  const auto& usa = outcome.reports[0];
  const auto& chile = outcome.reports[1];
  EXPECT_EQ(usa.country, "U.S.A");
  EXPECT_GE(usa.r_inf_hat, 0.003);
  EXPECT_LE(usa.r_inf_hat, 0.038);
  EXPECT_LT(chile.r_inf_hat, 0.0);

  const auto rows = cli::aggregate_rows(outcome.reports, 1e-9);
  EXPECT_EQ(rows[1].countries, (std::vector<std::string>{"U.S.A"}));
  EXPECT_EQ(rows[2].countries, (std::vector<std::string>{"Chile"}));

  EXPECT_TRUE(fs::exists(cfg.out_dir / "U_S_A.report.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "Chile.report.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "summary.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "table.txt"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "U_S_A.curve_closed_form.json"));
  EXPECT_NE(slurp(cfg.out_dir / "table.txt").find("unstable"), std::string::npos);
}

TEST(CmdFit, FailuresAreIsolated) {
  const auto dir = fresh_dir("fit_fail");
  cli::RunConfig cfg;
  cfg.countries.push_back(synthetic_country(dir / "data", "USA", kUsa, 193, 65));
  cfg.countries.push_back({"Ghost", cfg.countries[0].nominal_csv, dir / "data" / "missing.csv"});
  cfg.out_dir = dir / "out";
  const auto partial = cli::cmd_fit(cfg);
  EXPECT_EQ(partial.exit_code, 2);
  EXPECT_EQ(partial.reports.size(), 1u);
  ASSERT_EQ(partial.failures.size(), 1u);
  EXPECT_EQ(partial.failures[0].first, "Ghost");

  cfg.countries.erase(cfg.countries.begin());
  EXPECT_EQ(cli::cmd_fit(cfg).exit_code, 1);
  cfg.countries.clear();
  EXPECT_EQ(cli::cmd_fit(cfg).exit_code, 1);
}

TEST(CmdFit, DeterministicOutput) {
  const auto dir = fresh_dir("fit_det");
  cli::RunConfig cfg;
  cfg.countries.push_back(synthetic_country(dir / "data", "USA", kUsa, 120, 66));
  cfg.curve_engine = cli::CurveEngine::Both;
  cfg.mc.n_paths = 2000;
  cfg.horizon = 20;
  cfg.curve_points = 21;
  cfg.out_dir = dir / "a";
  cli::cmd_fit(cfg);
  cfg.out_dir = dir / "b";
  cfg.mc.workers = 3;
  cli::cmd_fit(cfg);
  for (const char* f : {"USA.report.json", "summary.json", "table.txt", "USA.curve_monte_carlo.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(CmdCurve, ArgentinaLikeCurveRisesThenFalls) {
  // Starting below zero the rate first lifts D, then the positive long-run rate pulls it down.
  const auto& row = fixtures::row("Argentina");
  auto p = ou::dimensionalize({row.mu, row.kappa, 1.0 / row.inv_alpha}, -0.05);
  cli::CurveRequest req;
  req.model = p;
  req.t_max = 100;
  req.points = 201;
  req.out_dir = fresh_dir("curve_arg");
  const auto out = cli::cmd_curve(req);
  const auto& d = out.closed_form->d_values;
  int sign_changes = 0;
  double prev = d[1] - d[0];
  EXPECT_GT(prev, 0.0);
  for (std::size_t i = 2; i < d.size(); ++i) {
    const double slope = d[i] - d[i - 1];
    if ((slope > 0) != (prev > 0)) ++sign_changes;
    prev = slope;
  }
  EXPECT_EQ(sign_changes, 1);
  EXPECT_LT(prev, 0.0);
}

TEST(CmdCurve, DeterministicRateColumnIsExponential) {
  cli::CurveRequest req;
  req.model = OuParams{0.03, 0.5, 0.0, 0.03};
  req.t_max = 50;
  req.points = 11;
  req.out_dir = fresh_dir("curve_k0");
  cli::cmd_curve(req);
  const auto rows = read_csv_rows(req.out_dir / "curve_closed_form.csv");
  ASSERT_EQ(rows.size(), 11u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r[1], std::exp(-0.03 * r[0]), 1e-15);
    EXPECT_EQ(r[2], 0.0);
  }
  std::ifstream in(req.out_dir / "curve_closed_form.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,D,stderr,lnD");
}

TEST(CmdCurve, ChileLikeTailSlope) {
  const auto& row = fixtures::row("Chile");
  cli::CurveRequest req;
  req.model = ou::dimensionalize({row.mu, row.kappa, 1.0 / row.inv_alpha});
  req.t_max = 100;
  req.points = 101;
  req.out_dir = fresh_dir("curve_chile");
  const auto out = cli::cmd_curve(req);
  const auto& y = out.closed_form->log_d_values;
  EXPECT_NEAR(y[100] - y[99], 0.26, 0.005);
  EXPECT_NE(out.summary.find("ExponentialGrowth"), std::string::npos);
}

TEST(CmdCurve, BothEnginesAgreeOnOuFixtures) {
  for (const auto* name : {"U.S.A", "Chile", "Italy"}) {
    const auto& row = fixtures::row(name);
    cli::CurveRequest req;
    req.model = ou::dimensionalize({row.mu, row.kappa, 1.0 / row.inv_alpha});
    req.t_max = 10;
    req.points = 11;
    req.engine = cli::CurveEngine::Both;
    req.mc.n_paths = 20'000;
    req.mc.dt = 1.0 / 32;
    req.out_dir = fresh_dir("curve_both");
    const auto out = cli::cmd_curve(req);
    ASSERT_TRUE(out.max_abs_z.has_value());
    EXPECT_LE(*out.max_abs_z, 4.0) << name;
    EXPECT_NE(out.summary.find("max_abs_z="), std::string::npos);
    EXPECT_TRUE(fs::exists(req.out_dir / "curve_monte_carlo.csv"));
  }
}

TEST(CmdCurve, ClosedFormNeedsOu) {
  cli::CurveRequest req;
  req.model = rates::LognormalParams{0.0, 0.2, 0.05};
  req.out_dir = fresh_dir("curve_ln");
  EXPECT_THROW(cli::cmd_curve(req), DomainError);
  req.engine = cli::CurveEngine::MonteCarlo;
  req.t_max = 5;
  req.points = 6;
  req.mc.n_paths = 500;
  EXPECT_NO_THROW(cli::cmd_curve(req));
}

TEST(CmdPhase, Rows) {
  const std::vector<est::EstimationReport> reports{nd_report("U.S.A", 0.14, 0.23, 1 / 5.6),
                                                   nd_report("Above", 1.0, 0.5, 1.0),
                                                   nd_report("Edge", 0.125, 0.5, 1.0)};
  const auto rows = cli::phase_rows(reports, ou::kDefaultRegimeTolerance);
  EXPECT_EQ(rows[0].regime, ou::Regime::ExponentialDecay);
  EXPECT_TRUE(rows[0].below_identity);
  EXPECT_FALSE(rows[1].below_identity);
  EXPECT_EQ(rows[1].regime, ou::Regime::ExponentialDecay);
  EXPECT_EQ(rows[2].regime, ou::Regime::AsymptoticallyConstant);
}

TEST(CmdPhase, ReadsReportDirectory) {
  const auto dir = fresh_dir("phase");
  for (const auto& r : {nd_report("B", 0.14, 0.23, 0.2), nd_report("A", -0.17, 0.98, 0.4)}) {
    std::ofstream(dir / (r.country + ".report.json")) << cli::report_to_json(r).dump();
  }
  const auto rows = cli::cmd_phase(dir, dir, cli::OutputFormat::Csv, ou::kDefaultRegimeTolerance);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].country, "A");
  EXPECT_EQ(rows[0].regime, ou::Regime::ExponentialGrowth);
  const auto text = slurp(dir / "phase.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "country,kappa,mu,r_inf,regime,below_identity");
}

TEST(CmdNegprob, GridLandmarks) {
  const auto dir = fresh_dir("negprob");
  const auto rows = cli::cmd_negprob(2.0, 2.0, 40, dir, cli::OutputFormat::Csv);
  EXPECT_EQ(rows.size(), 40u * 41u);
  for (const auto& r : rows) {
    if (std::abs(r.mu - r.kappa) < 1e-12) EXPECT_NEAR(r.p_negative, 0.0786, 0.0005);
    if (r.kappa == 0.05 && r.mu == 2.0) EXPECT_LT(r.p_negative, 1e-100);
    if (r.kappa == 2.0 && r.mu == 0.0) EXPECT_EQ(r.p_negative, 0.5);
  }
  const auto text = slurp(dir / "negprob.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "kappa,mu,p_negative");
  const auto wide = cli::negprob_grid(20.0, 0.2, 10);
  EXPECT_NEAR(wide.back().p_negative, 0.5, 0.01);
}
