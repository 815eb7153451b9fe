// stochdisc: discount functions under stochastic real interest rates.
//
//   stochdisc fit --config countries.cfg --out results
//   stochdisc curve --model ou --m 0.026 --alpha 0.1786 --k 0.018 --engine both
//   stochdisc phase --reports results
//   stochdisc negprob --kappa-max 2 --mu-max 2 --steps 40

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stochdisc/cli_reporter.hpp"
#include "stochdisc/errors.hpp"

namespace cli = stochdisc::cli;
namespace rates = stochdisc::rates;

int main(int argc, char** argv) {
  CLI::App app{"Discount functions under stochastic real interest rates"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string out_dir = ".";
  unsigned workers = 0;
  app.add_option("--seed", seed, "Random seed for Monte Carlo runs");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Monte Carlo worker threads (0 = all cores)");

  auto* fit = app.add_subcommand("fit", "Estimate OU parameters for each configured country");
  std::string config_path;
  fit->add_option("--config", config_path, "Key-value configuration file")->required()->check(CLI::ExistingFile);

  auto* curve = app.add_subcommand("curve", "Emit a discount curve D(t)");
  std::string model = "ou";
  std::string engine = "closed-form";
  std::string report_path;
  double m = 0.0, alpha = 1.0, k = 0.0, a = 0.0, b = 0.0;
  std::optional<double> r0;
  double tmax = 100.0;
  std::size_t points = 101;
  std::size_t paths = 100'000;
  double dt = 1.0 / 64.0;
  double max_steps = 2e10;
  bool allow_coarse_feller = false;
  curve->add_option("--model", model, "Rate model")->check(CLI::IsMember({"ou", "feller", "lognormal"}));
  curve->add_option("--m", m, "Mean-reversion level (1/year)");
  curve->add_option("--alpha", alpha, "Reversion strength (1/year)");
  curve->add_option("--k", k, "Noise amplitude");
  curve->add_option("--r0", r0, "Initial rate; defaults to m (OU/Feller)");
  curve->add_option("--a", a, "Log-normal drift of r");
  curve->add_option("--b", b, "Log-normal volatility");
  curve->add_option("--report", report_path, "Use the OU fit stored in a *.report.json file")
      ->check(CLI::ExistingFile);
  curve->add_option("--tmax", tmax, "Curve horizon in years");
  curve->add_option("--points", points, "Number of output points including t = 0");
  curve->add_option("--engine", engine, "closed-form, mc or both")
      ->check(CLI::IsMember({"closed-form", "mc", "both"}));
  curve->add_option("--paths", paths, "Monte Carlo paths");
  curve->add_option("--dt", dt, "Monte Carlo time step upper bound (years)");
  curve->add_option("--max-steps", max_steps, "Cap on paths x steps");
  curve->add_flag("--allow-coarse-feller", allow_coarse_feller, "Permit Feller steps above 0.1/alpha");

  auto* phase = app.add_subcommand("phase", "Phase-plane coordinates of fitted reports");
  std::string reports_dir;
  double tol = stochdisc::ou::kDefaultRegimeTolerance;
  phase->add_option("--reports", reports_dir, "Directory of *.report.json files")
      ->required()
      ->check(CLI::ExistingDirectory);
  phase->add_option("--tol", tol, "Regime boundary tolerance on mu - kappa^2/2");

  auto* negprob = app.add_subcommand("negprob", "Stationary negative-rate probability over a (kappa, mu) grid");
  double kappa_max = 2.0, mu_max = 2.0;
  std::size_t steps = 40;
  negprob->add_option("--kappa-max", kappa_max, "Largest kappa");
  negprob->add_option("--mu-max", mu_max, "Largest mu");
  negprob->add_option("--steps", steps, "Grid subdivisions per axis");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto fmt = cli::parse_format(format);

    if (*fit) {
      auto config = cli::load_run_config(config_path);
      if (app.count("--out") > 0) config.out_dir = out_dir;
      if (app.count("--format") > 0) config.format = fmt;
      if (seed) config.mc.seed = *seed;
      config.mc.workers = workers;
      const auto outcome = cli::cmd_fit(config);
      for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& [country, error] : outcome.failures) {
        std::cerr << "error: " << (country.empty() ? "" : country + ": ") << error << '\n';
      }
      for (const auto& r : outcome.reports) {
        std::cout << r.country << ": r_inf=" << cli::format_number(r.r_inf_hat)
                  << " regime=" << stochdisc::ou::to_string(r.regime.regime) << '\n';
      }
      return outcome.exit_code;
    }

    if (*curve) {
      cli::CurveRequest req;
      if (!report_path.empty()) {
        std::ifstream in(report_path);
        req.model = cli::params_from_report(cli::report_from_json(nlohmann::json::parse(in)));
      } else if (model == "ou") {
        req.model = rates::OuParams{m, alpha, k, r0.value_or(m)};
      } else if (model == "feller") {
        req.model = rates::FellerParams{m, alpha, k, r0.value_or(m)};
      } else {
        req.model = rates::LognormalParams{a, b, r0.value_or(0.01)};
      }
      req.t_max = tmax;
      req.points = points;
      req.engine = cli::parse_engine(engine);
      req.mc.n_paths = paths;
      req.mc.dt = dt;
      req.mc.max_path_steps = max_steps;
      req.mc.allow_coarse_feller = allow_coarse_feller;
      req.mc.workers = workers;
      if (seed) req.mc.seed = *seed;
      req.out_dir = out_dir;
      req.format = fmt;
      const auto outcome = cli::cmd_curve(req);
      std::cout << outcome.summary;
      for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
      return 0;
    }

    if (*phase) {
      const auto rows = cli::cmd_phase(reports_dir, out_dir, fmt, tol);
      std::cout << "wrote " << rows.size() << " phase-plane rows\n";
      return 0;
    }

    if (*negprob) {
      const auto rows = cli::cmd_negprob(kappa_max, mu_max, steps, out_dir, fmt);
      std::cout << "wrote " << rows.size() << " grid points\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
