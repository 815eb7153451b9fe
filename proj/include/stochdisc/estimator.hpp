#pragma once

/**
 * @file estimator.hpp
 * @brief OU parameter estimation from a real-rate series.
 *
 * m is the sample mean. alpha comes from fitting sigma^2 exp(-alpha tau) to
 * the biased (1/N) empirical autocovariance, and k = sqrt(2 alpha K(0)) uses
 * the sample variance K(0). Robustness is gauged by re-estimating m and
 * sigma^2 on contiguous blocks while keeping the full-sample alpha.
 */

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stochdisc/data_pipeline.hpp"
#include "stochdisc/ou_analytics.hpp"

namespace stochdisc::est {

inline constexpr double kDefaultMaxLagYears = 20.0;
inline constexpr std::size_t kDefaultBlocks = 4;

double estimate_mean(const data::RateSeries& series);

/// Biased autocovariance K(l) = (1/N) sum (x_i - xbar)(x_{i+l} - xbar), l = 0..max_lag.
std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag);

struct ExponentialFit {
  double amplitude = 0.0;
  double alpha = 0.0;
  double residual_sse = 0.0;
  double alpha_stderr = 0.0;
  bool at_upper_bound = false;
  bool at_lower_bound = false;
};

/// Least-squares fit of amplitude * exp(-alpha * lag) to (lags, acov). The
/// starting point comes from a log-linear regression on the positive prefix.
ExponentialFit fit_exponential(std::span<const double> lags, std::span<const double> acov);

struct AutocorrFit {
  std::vector<double> lags;  ///< years
  std::vector<double> acov;
  double alpha_hat = 0.0;
  double sigma2_hat = 0.0;  ///< K(0), the sample variance
  double amplitude_hat = 0.0;
  double residual_sse = 0.0;
  double alpha_stderr = 0.0;
  std::size_t positive_prefix = 0;
  bool short_correlation = false;  ///< correlation time below the sampling step
  std::vector<std::string> warnings;
};

/// min(20 years, span/4).
double default_max_lag(const data::RateSeries& series);

/// max_lag <= 0 selects default_max_lag.
AutocorrFit fit_autocorrelation(const data::RateSeries& series, double max_lag_years = 0.0);

double estimate_k(const AutocorrFit& fit);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct BlockEstimate {
  double t_start = 0.0;
  double t_end = 0.0;
  double m = 0.0;
  double sigma2 = 0.0;
  double k = 0.0;
  double mu = 0.0;
  double kappa = 0.0;
  double r_inf = 0.0;
};

struct BlockReport {
  std::vector<BlockEstimate> blocks;
  Range mu;
  Range kappa;
  Range r_inf;
};

/// Splits into `n_blocks` equal contiguous blocks (trailing remainder
/// dropped). Each block is demeaned separately; alpha is the full-sample value.
BlockReport block_subsample_report(const data::RateSeries& series, double full_alpha,
                                   std::size_t n_blocks = kDefaultBlocks);

struct EstimatorOptions {
  double max_lag_years = 0.0;  ///< <= 0: default_max_lag
  std::size_t n_blocks = kDefaultBlocks;
  double regime_tolerance = ou::kDefaultRegimeTolerance;
};

struct EstimationReport {
  std::string country;
  std::size_t n_samples = 0;
  double dt = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double span_years = 0.0;
  double max_lag_years = 0.0;

  double m_hat = 0.0;
  double alpha_hat = 0.0;
  double alpha_stderr = 0.0;
  double sigma2_hat = 0.0;
  double k_hat = 0.0;
  double mu_hat = 0.0;
  double kappa_hat = 0.0;
  double r_inf_hat = 0.0;
  ou::RegimeLabel regime;
  double prob_negative_model = 0.0;
  double prob_below_r_inf_model = 0.0;

  double neg_fraction_empirical = 0.0;
  double neg_years_empirical = 0.0;
  double mean_negative_amplitude = 0.0;

  std::vector<BlockEstimate> blocks;
  Range mu_range;
  Range kappa_range;
  Range r_inf_range;

  /// Zero-variance input: alpha is undefined, k = 0 and r_inf = m.
  bool degenerate = false;
  std::vector<std::string> warnings;
};

EstimationReport build_report(const data::RateSeries& series, const EstimatorOptions& options = {});

}  // namespace stochdisc::est
