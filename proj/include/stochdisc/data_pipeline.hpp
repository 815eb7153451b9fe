#pragma once

/**
 * @file data_pipeline.hpp
 * @brief Real interest rates from nominal bond yields and a CPI index.
 *
 * Nominal open annual rates are turned into log-rates b(t) = ln(1 + rate).
 * Inflation is the forward T-year log growth of the CPI,
 * c(t) = ln(C(t + T) / C(t)) / T, so the last T years of the CPI series have
 * no inflation value. The real rate is r(t) = b(t) - c(t).
 *
 * Input CSV: header `time,value`, decimal-year times, '.' decimal separator.
 */

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace stochdisc::data {

enum class SeriesKind { NominalOpenRate, CpiIndex };

inline constexpr double kAnnual = 1.0;
inline constexpr double kQuarterly = 0.25;
inline constexpr std::size_t kMinRateSamples = 20;
inline constexpr double kDefaultInflationWindow = 10.0;

struct RawSeries {
  std::vector<double> times;
  std::vector<double> values;
  SeriesKind kind = SeriesKind::NominalOpenRate;
  std::string country;
  double spacing = kAnnual;
};

/// Uniformly sampled real log-rates.
struct RateSeries {
  std::vector<double> times;
  std::vector<double> r;
  double dt = kAnnual;
  std::string country;

  std::size_t size() const noexcept { return r.size(); }
  double span() const noexcept { return static_cast<double>(r.size()) * dt; }
};

/// Checks ordering, uniform annual/quarterly spacing and CPI positivity.
RawSeries make_raw_series(std::vector<double> times, std::vector<double> values, SeriesKind kind,
                          std::string country);

/// Builds a RateSeries; requires finite values, uniform spacing and at least
/// kMinRateSamples points.
RateSeries make_rate_series(std::vector<double> times, std::vector<double> r, std::string country);

struct LoadedSeries {
  RawSeries series;
  std::vector<std::string> warnings;
};

/// Parses `time,value` rows. Rows with an empty value, and jumps in time,
/// split the data into segments; the longest segment is kept with a warning.
LoadedSeries parse_series_csv(std::istream& in, SeriesKind kind, const std::string& country);
LoadedSeries read_series_csv(const std::filesystem::path& path, SeriesKind kind, const std::string& country);

double to_log_rate(double open_annual_rate);

struct InflationSeries {
  std::vector<double> times;
  std::vector<double> c;
  double spacing = kAnnual;
};

InflationSeries inflation_log_rate(const RawSeries& cpi, double window_years = kDefaultInflationWindow);

RateSeries real_rate_series(const RawSeries& nominal, const RawSeries& cpi,
                            double window_years = kDefaultInflationWindow);

struct NegativeRateSummary {
  double fraction = 0.0;
  double total_years = 0.0;
  double mean_negative_amplitude = 0.0;
};

NegativeRateSummary negative_rate_summary(const RateSeries& series);

}  // namespace stochdisc::data
