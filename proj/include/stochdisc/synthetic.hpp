#pragma once

// Synthetic nominal-rate and CPI files whose real rate is a simulated OU path.
// Used for fixtures and demos; no historical data ships with the project.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stochdisc/data_pipeline.hpp"
#include "stochdisc/rate_models.hpp"

namespace stochdisc::synth {

struct SyntheticCountry {
  std::string name = "Synthetic";
  rates::OuParams params;
  double start_year = 1820.0;
  double years = 190.0;  ///< length of the real-rate series
  double dt = data::kAnnual;
  double inflation_window = data::kDefaultInflationWindow;
  double inflation_drift = 0.03;  ///< mean log-inflation per year
  double inflation_vol = 0.02;    ///< log-CPI random-walk volatility
  std::uint64_t seed = 1;
};

struct SyntheticData {
  data::RawSeries nominal;
  data::RawSeries cpi;
  std::vector<double> real_rates;  ///< the OU path the files encode
};

SyntheticData make_synthetic_country(const SyntheticCountry& spec);

struct SyntheticFiles {
  std::filesystem::path nominal_csv;
  std::filesystem::path cpi_csv;
};

/// Writes `<name>_nominal.csv` and `<name>_cpi.csv` into `dir`.
SyntheticFiles write_synthetic_country(const SyntheticCountry& spec, const std::filesystem::path& dir);

std::string series_to_csv(const data::RawSeries& series);

}  // namespace stochdisc::synth
