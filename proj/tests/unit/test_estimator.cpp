#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stochdisc/errors.hpp"
#include "stochdisc/estimator.hpp"
#include "stochdisc/mc_engine.hpp"

using namespace stochdisc;
using rates::OuParams;

namespace {

data::RateSeries make_series(std::vector<double> r, double dt = 1.0, double start = 1900.0) {
  std::vector<double> t(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) t[i] = start + static_cast<double>(i) * dt;
  return data::make_rate_series(std::move(t), std::move(r), "X");
}

// Stationary OU sample: start from a stationary draw by burning in 20/alpha.
data::RateSeries simulate_ou(const OuParams& p, double years, double dt, std::uint64_t seed) {
  const auto burn = static_cast<std::size_t>(std::ceil(20.0 / p.alpha / dt));
  const auto n = static_cast<std::size_t>(std::llround(years / dt));
  const auto path = mc::simulate_rate_path(rates::validate(p), dt, burn + n - 1, seed);
  return make_series(std::vector<double>(path.begin() + static_cast<std::ptrdiff_t>(burn), path.end()), dt);
}

const OuParams kUsa{0.026, 1.0 / 5.6, 0.018, 0.026};

}  // namespace

TEST(EstimateMean, Examples) {
  EXPECT_DOUBLE_EQ(est::estimate_mean(make_series(std::vector<double>(30, 0.02))), 0.02);
  std::vector<double> alt;
  for (int i = 0; i < 40; ++i) alt.push_back(i % 2 ? 0.05 : -0.05);
  EXPECT_NEAR(est::estimate_mean(make_series(alt)), 0.0, 1e-17);
  data::RateSeries tiny;
  tiny.r = {0.1, 0.2};
  EXPECT_THROW(est::estimate_mean(tiny), InsufficientData);
}

TEST(EstimateMean, SimulatedOuWithinCorrelatedStandardError) {
  const OuParams p{0.03, 0.2, 0.02, 0.03};
  const double span = 1e4;
  const auto s = simulate_ou(p, span, 0.25, 41);
  const double sigma2 = rates::stationary_stats(p).variance;
  EXPECT_NEAR(est::estimate_mean(s), 0.03, 3 * std::sqrt(2 * sigma2 / (p.alpha * span)));
}

TEST(Autocovariance, LagZeroIsPopulationVariance) {
  const auto s = simulate_ou(kUsa, 200, 1.0, 42);
  const double mean = std::accumulate(s.r.begin(), s.r.end(), 0.0) / static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s.r) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.size());
  const auto k = est::autocovariance(s.r, 10);
  ASSERT_EQ(k.size(), 11u);
  EXPECT_NEAR(k[0], var, 1e-15 * var);
  EXPECT_THROW(est::autocovariance(s.r, s.size()), DomainError);
}

TEST(Autocovariance, BiasedNormalization) {
  const std::vector<double> x{1.0, -1.0, 1.0, -1.0};
  const auto k = est::autocovariance(x, 2);
  EXPECT_DOUBLE_EQ(k[0], 1.0);
  EXPECT_DOUBLE_EQ(k[1], -3.0 / 4.0);
  EXPECT_DOUBLE_EQ(k[2], 2.0 / 4.0);
}

TEST(FitExponential, RecoversNoiselessModel) {
  std::vector<double> lags, acov;
  for (int i = 0; i <= 80; ++i) {
    lags.push_back(0.25 * i);
    acov.push_back(4e-4 * std::exp(-0.25 * 0.25 * i));
  }
  const auto fit = est::fit_exponential(lags, acov);
  EXPECT_NEAR(fit.alpha, 0.25, 1e-6 * 0.25);
  EXPECT_NEAR(fit.amplitude, 4e-4, 1e-6 * 4e-4);
  EXPECT_LT(fit.residual_sse, 1e-20);
  EXPECT_FALSE(fit.at_upper_bound);
  EXPECT_FALSE(fit.at_lower_bound);
}

TEST(FitExponential, Errors) {
  const std::vector<double> two{0.0, 1.0};
  EXPECT_THROW(est::fit_exponential(two, two), FitError);
  const std::vector<double> lags{0.0, 1.0, 2.0}, zero{0.0, 0.0, 0.0};
  EXPECT_THROW(est::fit_exponential(lags, zero), FitError);
}

TEST(FitAutocorrelation, SimulatedOuRecoversAlpha) {
  const auto s = simulate_ou(kUsa, 1e4, 0.25, 43);
  const auto fit = est::fit_autocorrelation(s);
  EXPECT_NEAR(fit.alpha_hat, kUsa.alpha, 0.2 * kUsa.alpha);
  EXPECT_FALSE(fit.short_correlation);
  EXPECT_GT(fit.alpha_stderr, 0.0);
  EXPECT_DOUBLE_EQ(fit.lags.back(), 20.0);
  EXPECT_EQ(fit.acov.size(), 81u);
  EXPECT_EQ(fit.sigma2_hat, fit.acov.front());
}

TEST(FitAutocorrelation, WhiteNoiseIsFlagged) {
  mc::PathRng rng(44, 0);
  std::vector<double> r(400);
  for (auto& v : r) v = 0.01 * rng.normal();
  const auto fit = est::fit_autocorrelation(make_series(r));
  EXPECT_GE(fit.alpha_hat, 1.0);
  EXPECT_TRUE(fit.short_correlation);
  EXPECT_FALSE(fit.warnings.empty());
}

TEST(FitAutocorrelation, Errors) {
  EXPECT_THROW(est::fit_autocorrelation(make_series(std::vector<double>(100, 0.02))), FitError);
  const auto s = simulate_ou(kUsa, 100, 1.0, 45);
  EXPECT_THROW(est::fit_autocorrelation(s, 26.0), DomainError);
  EXPECT_NO_THROW(est::fit_autocorrelation(s, 25.0));
  EXPECT_DOUBLE_EQ(est::default_max_lag(s), 20.0);
  EXPECT_DOUBLE_EQ(est::default_max_lag(simulate_ou(kUsa, 40, 1.0, 46)), 10.0);
}

TEST(EstimateK, Examples) {
  est::AutocorrFit fit;
  fit.alpha_hat = 0.3;
  fit.sigma2_hat = 0.0;
  EXPECT_EQ(est::estimate_k(fit), 0.0);
  fit.alpha_hat = 0.1786;
  fit.sigma2_hat = 9.07e-4;
  EXPECT_NEAR(est::estimate_k(fit), 0.017999455547321424, 1e-15);
  EXPECT_NEAR(est::estimate_k(fit), 0.018, 1e-3 * 0.018);
}

TEST(EstimateK, RoundTrip) {
  const auto s = simulate_ou(kUsa, 1e4, 0.25, 47);
  EXPECT_NEAR(est::estimate_k(est::fit_autocorrelation(s)), kUsa.k, 0.2 * kUsa.k);
}

TEST(Blocks, IdenticalBlocksHaveNoSpread) {
  const auto base = simulate_ou(kUsa, 50, 1.0, 48);
  std::vector<double> r;
  for (int b = 0; b < 4; ++b) r.insert(r.end(), base.r.begin(), base.r.end());
  const auto rep = est::block_subsample_report(make_series(r), 0.2);
  ASSERT_EQ(rep.blocks.size(), 4u);
  EXPECT_DOUBLE_EQ(rep.mu.min, rep.mu.max);
  EXPECT_DOUBLE_EQ(rep.kappa.min, rep.kappa.max);
  EXPECT_DOUBLE_EQ(rep.r_inf.min, rep.r_inf.max);
}

TEST(Blocks, HyperinflationBlockIsTheMinimum) {
  auto s = simulate_ou(kUsa, 200, 1.0, 49);
  mc::PathRng rng(50, 0);
  for (std::size_t i = 100; i < 150; ++i) s.r[i] = -0.5 + 0.1 * rng.normal();
  const auto rep = est::block_subsample_report(s, kUsa.alpha);
  EXPECT_EQ(rep.r_inf.min, rep.blocks[2].r_inf);
  EXPECT_LT(rep.r_inf.min, -0.4);
  EXPECT_EQ(rep.blocks[2].t_start, 2000.0);
  EXPECT_EQ(rep.blocks[2].t_end, 2049.0);
}

TEST(Blocks, RemainderDroppedAndSizeChecked) {
  const auto s = simulate_ou(kUsa, 103, 1.0, 51);
  const auto rep = est::block_subsample_report(s, kUsa.alpha);
  EXPECT_EQ(rep.blocks.back().t_end, s.times[99]);
  EXPECT_THROW(est::block_subsample_report(simulate_ou(kUsa, 79, 1.0, 52), kUsa.alpha), InsufficientData);
}

TEST(Blocks, SpreadShrinksLikeInverseSquareRoot) {
  // Quadrupling block length should halve the max - min spread of r_inf; averaged over seeds.
  double spread_short = 0.0, spread_long = 0.0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto short_series = simulate_ou(kUsa, 2500, 0.25, 100 + seed);
    const auto long_series = simulate_ou(kUsa, 1e4, 0.25, 200 + seed);
    const auto a = est::block_subsample_report(short_series, kUsa.alpha);
    const auto b = est::block_subsample_report(long_series, kUsa.alpha);
    spread_short += a.r_inf.max - a.r_inf.min;
    spread_long += b.r_inf.max - b.r_inf.min;
  }
  const double ratio = spread_short / spread_long;
  EXPECT_GT(ratio, 1.0);
  EXPECT_LT(ratio, 4.0);
}

TEST(BuildReport, DerivedIdentitiesHoldExactly) {
  const auto rep = est::build_report(simulate_ou(kUsa, 300, 1.0, 53));
  EXPECT_NEAR(rep.mu_hat, rep.m_hat / rep.alpha_hat, 1e-12 * std::abs(rep.mu_hat));
  EXPECT_NEAR(rep.kappa_hat, rep.k_hat / std::pow(rep.alpha_hat, 1.5), 1e-12 * rep.kappa_hat);
  const double r_inf = rep.m_hat - rep.k_hat * rep.k_hat / (2 * rep.alpha_hat * rep.alpha_hat);
  EXPECT_NEAR(rep.r_inf_hat, r_inf, 1e-12 * std::abs(r_inf));
  EXPECT_EQ(rep.blocks.size(), 4u);
  EXPECT_EQ(rep.n_samples, 300u);
  EXPECT_FALSE(rep.degenerate);
}

TEST(BuildReport, TimeShiftInvariant) {
  const auto s = simulate_ou(kUsa, 150, 1.0, 54);
  const auto a = est::build_report(s);
  auto shifted = s;
  for (auto& t : shifted.times) t += 123.0;
  const auto b = est::build_report(shifted);
  EXPECT_EQ(a.m_hat, b.m_hat);
  EXPECT_EQ(a.alpha_hat, b.alpha_hat);
  EXPECT_EQ(a.k_hat, b.k_hat);
  EXPECT_EQ(a.r_inf_hat, b.r_inf_hat);
  EXPECT_EQ(b.t_start, a.t_start + 123.0);
}

TEST(BuildReport, UsaLikeLongRunRateInBand) {
  const auto rep = est::build_report(simulate_ou(kUsa, 193, 1.0, 55));
  EXPECT_GE(rep.r_inf_hat, 0.003);
  EXPECT_LE(rep.r_inf_hat, 0.038);
  EXPECT_EQ(rep.regime.regime, ou::Regime::ExponentialDecay);
}

TEST(BuildReport, ConstantSeriesIsDegenerate) {
  const auto rep = est::build_report(make_series(std::vector<double>(100, 0.02)));
  EXPECT_TRUE(rep.degenerate);
  EXPECT_EQ(rep.k_hat, 0.0);
  EXPECT_EQ(rep.r_inf_hat, rep.m_hat);
  EXPECT_DOUBLE_EQ(rep.m_hat, 0.02);
  EXPECT_EQ(rep.prob_negative_model, 0.0);
  EXPECT_TRUE(std::isnan(rep.alpha_hat));
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(rep.regime.regime, ou::Regime::ExponentialDecay);

  const auto neg = est::build_report(make_series(std::vector<double>(100, -0.01)));
  EXPECT_EQ(neg.prob_negative_model, 1.0);
  EXPECT_EQ(neg.neg_fraction_empirical, 1.0);
  EXPECT_EQ(neg.regime.regime, ou::Regime::ExponentialGrowth);
}
