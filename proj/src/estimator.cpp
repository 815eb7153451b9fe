#include "stochdisc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "stochdisc/errors.hpp"

namespace stochdisc::est {

namespace {

constexpr std::size_t kGridPoints = 300;
constexpr std::uintmax_t kBrentIterations = 200;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Profile {
  double amplitude;
  double sse;
};

// For fixed alpha the optimal amplitude is linear; return it with the SSE.
Profile profile(std::span<const double> lags, std::span<const double> acov, double alpha) {
  double ske = 0.0, see = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double e = std::exp(-alpha * lags[i]);
    ske += acov[i] * e;
    see += e * e;
  }
  const double amplitude = ske / see;
  double sse = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double res = acov[i] - amplitude * std::exp(-alpha * lags[i]);
    sse += res * res;
  }
  return {amplitude, sse};
}

bool is_constant(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return lo == x.end() || *lo == *hi;
}

double variance_of(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size());
}

Range range_of(const std::vector<BlockEstimate>& blocks, double BlockEstimate::*field) {
  Range r{blocks.front().*field, blocks.front().*field};
  for (const auto& b : blocks) {
    r.min = std::min(r.min, b.*field);
    r.max = std::max(r.max, b.*field);
  }
  return r;
}

}  // namespace

double estimate_mean(const data::RateSeries& series) {
  if (series.r.size() < data::kMinRateSamples) {
    throw InsufficientData("estimate_mean: need at least " + std::to_string(data::kMinRateSamples) + " samples");
  }
  return std::accumulate(series.r.begin(), series.r.end(), 0.0) / static_cast<double>(series.r.size());
}

std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
  if (x.empty()) throw InsufficientData("autocovariance: empty input");
  if (max_lag >= x.size()) throw DomainError("autocovariance: max_lag must be < series length");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  std::vector<double> centered(x.size());
  std::transform(x.begin(), x.end(), centered.begin(), [mean](double v) { return v - mean; });
  std::vector<double> acov(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < centered.size(); ++i) s += centered[i] * centered[i + lag];
    acov[lag] = s / n;
  }
  return acov;
}

ExponentialFit fit_exponential(std::span<const double> lags, std::span<const double> acov) {
  if (lags.size() != acov.size()) throw DomainError("fit_exponential: lags and acov differ in length");
  if (lags.size() < 3) throw FitError("fit_exponential: need at least 3 lags");
  if (lags.front() != 0.0) throw DomainError("fit_exponential: lags must start at 0");
  for (std::size_t i = 1; i < lags.size(); ++i) {
    if (!(lags[i] > lags[i - 1])) throw DomainError("fit_exponential: lags must be ascending");
  }
  if (!(acov.front() > 0.0)) throw FitError("fit_exponential: zero variance, nothing to fit");

  const double alpha_lo = 1e-3 / lags.back();
  const double alpha_hi = 50.0 / lags[1];
  const double u_lo = std::log(alpha_lo);
  const double u_hi = std::log(alpha_hi);

  std::size_t prefix = 0;
  while (prefix < acov.size() && acov[prefix] > 0.0) ++prefix;

  // Initial guess: log-linear regression over the positive prefix.
  double alpha0 = alpha_hi;
  if (prefix >= 3) {
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < prefix; ++i) {
      tm += lags[i];
      ym += std::log(acov[i]);
    }
    tm /= static_cast<double>(prefix);
    ym /= static_cast<double>(prefix);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < prefix; ++i) {
      sxx += (lags[i] - tm) * (lags[i] - tm);
      sxy += (lags[i] - tm) * (std::log(acov[i]) - ym);
    }
    alpha0 = -sxy / sxx;
  } else if (prefix == 2) {
    alpha0 = -std::log(acov[1] / acov[0]) / lags[1];
  }
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) alpha0 = alpha_lo;
  const double u0 = std::clamp(std::log(alpha0), u_lo, u_hi);

  auto objective = [&](double u) { return profile(lags, acov, std::exp(u)).sse; };

  // Bracket the minimum on a log-spaced grid, then refine with Brent.
  const double h = (u_hi - u_lo) / static_cast<double>(kGridPoints - 1);
  double best_u = u0;
  double best_f = objective(u0);
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    const double u = u_lo + h * static_cast<double>(i);
    const double f = objective(u);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }
  const double a = std::max(u_lo, best_u - h);
  const double b = std::min(u_hi, best_u + h);
  std::uintmax_t iterations = kBrentIterations;
  const auto [u_star, f_star] = boost::math::tools::brent_find_minima(
      objective, a, b, std::numeric_limits<double>::digits / 2, iterations);
  if (iterations >= kBrentIterations) throw NonConvergence("fit_exponential: Brent iteration cap reached");

  ExponentialFit fit;
  fit.alpha = std::exp(u_star);
  const auto prof = profile(lags, acov, fit.alpha);
  fit.amplitude = prof.amplitude;
  fit.residual_sse = prof.sse;
  fit.at_upper_bound = u_star > u_hi - 1e-6;
  fit.at_lower_bound = u_star < u_lo + 1e-6;

  const double n = static_cast<double>(lags.size());
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;
  for (double tau : lags) {
    const double e = std::exp(-fit.alpha * tau);
    a11 += e * e;
    a12 += -fit.amplitude * tau * e * e;
    a22 += fit.amplitude * fit.amplitude * tau * tau * e * e;
  }
  const double det = a11 * a22 - a12 * a12;
  const double s2 = fit.residual_sse / (n - 2.0);
  fit.alpha_stderr = det > 0.0 ? std::sqrt(s2 * a11 / det) : std::numeric_limits<double>::infinity();
  return fit;
}

double default_max_lag(const data::RateSeries& series) {
  return std::min(kDefaultMaxLagYears, series.span() / 4.0);
}

AutocorrFit fit_autocorrelation(const data::RateSeries& series, double max_lag_years) {
  if (series.r.size() < data::kMinRateSamples) {
    throw InsufficientData("fit_autocorrelation: need at least " + std::to_string(data::kMinRateSamples) +
                           " samples");
  }
  const double span = series.span();
  if (max_lag_years <= 0.0) max_lag_years = default_max_lag(series);
  if (max_lag_years > span / 4.0 * (1.0 + 1e-12)) {
    throw DomainError("fit_autocorrelation: max_lag must be <= span/4");
  }
  const auto n_lags = static_cast<std::size_t>(std::floor(max_lag_years / series.dt + 1e-9));
  if (n_lags < 2) throw FitError("fit_autocorrelation: max_lag covers fewer than 3 lags");

  AutocorrFit fit;
  fit.acov = autocovariance(series.r, n_lags);
  fit.lags.resize(n_lags + 1);
  for (std::size_t i = 0; i <= n_lags; ++i) fit.lags[i] = static_cast<double>(i) * series.dt;
  fit.sigma2_hat = fit.acov.front();
  if (is_constant(series.r) || !(fit.sigma2_hat > 0.0)) throw FitError("fit_autocorrelation: series has zero variance");

  while (fit.positive_prefix < fit.acov.size() && fit.acov[fit.positive_prefix] > 0.0) ++fit.positive_prefix;

  const auto exp_fit = fit_exponential(fit.lags, fit.acov);
  fit.alpha_hat = exp_fit.alpha;
  fit.amplitude_hat = exp_fit.amplitude;
  fit.residual_sse = exp_fit.residual_sse;
  fit.alpha_stderr = exp_fit.alpha_stderr;
  fit.short_correlation = fit.positive_prefix < 3 || fit.alpha_hat * series.dt > 1.0;
  if (fit.short_correlation) {
    std::ostringstream os;
    os << series.country << ": correlation time 1/alpha=" << 1.0 / fit.alpha_hat
       << " years is below the sampling step; the series looks uncorrelated";
    fit.warnings.push_back(os.str());
  }
  if (exp_fit.at_lower_bound) {
    fit.warnings.push_back(series.country + ": alpha hit the lower search bound; the series may be non-stationary");
  }
  return fit;
}

double estimate_k(const AutocorrFit& fit) { return std::sqrt(2.0 * fit.alpha_hat * fit.sigma2_hat); }

BlockReport block_subsample_report(const data::RateSeries& series, double full_alpha, std::size_t n_blocks) {
  if (n_blocks < 1) throw DomainError("block_subsample_report: need at least one block");
  if (!(full_alpha > 0.0)) throw DomainError("block_subsample_report: alpha must be > 0");
  const std::size_t needed = data::kMinRateSamples * n_blocks;
  if (series.r.size() < needed) {
    throw InsufficientData("block_subsample_report: need at least " + std::to_string(needed) + " samples");
  }
  const std::size_t len = series.r.size() / n_blocks;
  const double alpha32 = std::pow(full_alpha, 1.5);

  BlockReport report;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::span<const double> block(series.r.data() + b * len, len);
    BlockEstimate est;
    est.t_start = series.times[b * len];
    est.t_end = series.times[(b + 1) * len - 1];
    est.m = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(len);
    est.sigma2 = variance_of(block);
    est.k = std::sqrt(2.0 * full_alpha * est.sigma2);
    est.mu = est.m / full_alpha;
    est.kappa = est.k / alpha32;
    est.r_inf = est.m - est.k * est.k / (2.0 * full_alpha * full_alpha);
    report.blocks.push_back(est);
  }
  report.mu = range_of(report.blocks, &BlockEstimate::mu);
  report.kappa = range_of(report.blocks, &BlockEstimate::kappa);
  report.r_inf = range_of(report.blocks, &BlockEstimate::r_inf);
  return report;
}

EstimationReport build_report(const data::RateSeries& series, const EstimatorOptions& options) {
  EstimationReport rep;
  rep.country = series.country;
  rep.n_samples = series.r.size();
  rep.dt = series.dt;
  rep.span_years = series.span();
  if (!series.times.empty()) {
    rep.t_start = series.times.front();
    rep.t_end = series.times.back();
  }
  rep.m_hat = estimate_mean(series);

  const auto neg = data::negative_rate_summary(series);
  rep.neg_fraction_empirical = neg.fraction;
  rep.neg_years_empirical = neg.total_years;
  rep.mean_negative_amplitude = neg.mean_negative_amplitude;

  if (is_constant(series.r)) {
    rep.degenerate = true;
    rep.alpha_hat = kNaN;
    rep.alpha_stderr = kNaN;
    rep.mu_hat = kNaN;
    rep.kappa_hat = 0.0;
    rep.r_inf_hat = rep.m_hat;
    const ou::NondimParams sign_only{rep.m_hat, 0.0, 1.0};
    rep.prob_negative_model = ou::prob_negative_stationary(sign_only);
    rep.prob_below_r_inf_model = 0.5;
    rep.regime = ou::classify_regime(sign_only, options.regime_tolerance);
    rep.warnings.push_back(series.country + ": zero-variance series; autocorrelation fit is undefined");
    return rep;
  }

  const auto fit = fit_autocorrelation(series, options.max_lag_years);
  rep.max_lag_years = fit.lags.back();
  rep.alpha_hat = fit.alpha_hat;
  rep.alpha_stderr = fit.alpha_stderr;
  rep.sigma2_hat = fit.sigma2_hat;
  rep.k_hat = estimate_k(fit);
  rep.warnings = fit.warnings;

  const rates::OuParams params{rep.m_hat, rep.alpha_hat, rep.k_hat, rep.m_hat};
  const auto nd = ou::nondimensionalize(params);
  rep.mu_hat = nd.mu;
  rep.kappa_hat = nd.kappa;
  rep.r_inf_hat = ou::r_infinity(params);
  rep.regime = ou::classify_regime(nd, options.regime_tolerance);
  rep.prob_negative_model = ou::prob_negative_stationary(nd);
  rep.prob_below_r_inf_model = ou::prob_below_r_infinity(params);

  const auto blocks = block_subsample_report(series, rep.alpha_hat, options.n_blocks);
  rep.blocks = blocks.blocks;
  rep.mu_range = blocks.mu;
  rep.kappa_range = blocks.kappa;
  rep.r_inf_range = blocks.r_inf;
  return rep;
}

}  // namespace stochdisc::est
