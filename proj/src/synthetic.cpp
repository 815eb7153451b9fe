#include "stochdisc/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stochdisc/errors.hpp"
#include "stochdisc/mc_engine.hpp"

namespace stochdisc::synth {

namespace {

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

SyntheticData make_synthetic_country(const SyntheticCountry& spec) {
  const auto model = rates::validate(spec.params);
  const auto n = static_cast<std::size_t>(std::llround(spec.years / spec.dt));
  const auto lookahead = static_cast<std::size_t>(std::llround(spec.inflation_window / spec.dt));
  if (n < 2) throw DomainError("synthetic country needs at least 2 samples");

  SyntheticData out;
  out.real_rates = mc::simulate_rate_path(model, spec.dt, n - 1, spec.seed, 0);

  // Log-CPI random walk, long enough for the forward inflation window.
  mc::PathRng rng(spec.seed, 1);
  std::vector<double> log_cpi(n + lookahead);
  log_cpi[0] = std::log(100.0);
  for (std::size_t i = 1; i < log_cpi.size(); ++i) {
    log_cpi[i] = log_cpi[i - 1] + spec.inflation_drift * spec.dt + spec.inflation_vol * std::sqrt(spec.dt) * rng.normal();
  }

  std::vector<double> nominal_t(n), nominal_v(n), cpi_t(n + lookahead), cpi_v(n + lookahead);
  for (std::size_t i = 0; i < cpi_t.size(); ++i) {
    cpi_t[i] = spec.start_year + static_cast<double>(i) * spec.dt;
    cpi_v[i] = std::exp(log_cpi[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (log_cpi[i + lookahead] - log_cpi[i]) / spec.inflation_window;
    nominal_t[i] = cpi_t[i];
    nominal_v[i] = std::expm1(out.real_rates[i] + c);
  }
  out.nominal = data::make_raw_series(std::move(nominal_t), std::move(nominal_v), data::SeriesKind::NominalOpenRate,
                                      spec.name);
  out.cpi = data::make_raw_series(std::move(cpi_t), std::move(cpi_v), data::SeriesKind::CpiIndex, spec.name);
  return out;
}

std::string series_to_csv(const data::RawSeries& series) {
  std::ostringstream os;
  os << "time,value\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) os << num(series.times[i]) << ',' << num(series.values[i]) << '\n';
  return os.str();
}

SyntheticFiles write_synthetic_country(const SyntheticCountry& spec, const std::filesystem::path& dir) {
  const auto data = make_synthetic_country(spec);
  std::filesystem::create_directories(dir);
  SyntheticFiles files{dir / (spec.name + "_nominal.csv"), dir / (spec.name + "_cpi.csv")};
  std::ofstream(files.nominal_csv, std::ios::binary) << series_to_csv(data.nominal);
  std::ofstream(files.cpi_csv, std::ios::binary) << series_to_csv(data.cpi);
  return files;
}

}  // namespace stochdisc::synth
