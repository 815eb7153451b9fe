#pragma once

/**
 * @file ou_analytics.hpp
 * @brief Closed-form discounting results for the Ornstein-Uhlenbeck rate.
 *
 * With tau = alpha t, mu = m / alpha and kappa = k / alpha^{3/2} the
 * discount function D(t) = E[exp(-int_0^t r)] satisfies
 *
 *   ln D(t) = -(r0/alpha)(1 - e^{-tau})
 *             + (kappa^2/2) [tau - 2(1 - e^{-tau}) + (1 - e^{-2 tau})/2]
 *             - mu [tau - (1 - e^{-tau})]
 *
 * and decays asymptotically at the long-run rate
 * r_inf = m - k^2 / (2 alpha^2) = alpha (mu - kappa^2 / 2).
 */

#include <optional>
#include <string_view>

#include "stochdisc/rate_models.hpp"

namespace stochdisc::ou {

/// Scale-free form of the OU parameters; alpha keeps the time scale.
struct NondimParams {
  double mu = 0.0;
  double kappa = 0.0;
  double alpha = 1.0;
};

NondimParams nondimensionalize(const rates::OuParams& p);

/// Inverse of nondimensionalize. When r0 is not given the rate starts at m.
rates::OuParams dimensionalize(const NondimParams& nd, std::optional<double> r0 = std::nullopt);

enum class Regime { ExponentialDecay, AsymptoticallyConstant, ExponentialGrowth };

struct RegimeLabel {
  Regime regime = Regime::AsymptoticallyConstant;
  double tolerance = 0.0;
};

inline constexpr double kDefaultRegimeTolerance = 1e-9;

std::string_view to_string(Regime regime) noexcept;
std::optional<Regime> parse_regime(std::string_view text) noexcept;

/// g(tau) = tau - 2(1 - e^{-tau}) + (1 - e^{-2 tau})/2, series-evaluated near 0.
double fluctuation_bracket(double tau);

/// h(tau) = tau - (1 - e^{-tau}), series-evaluated near 0.
double drift_bracket(double tau);

/// Exact ln D(t). Never throws for large arguments; the result saturates to
/// +/-infinity if it leaves the representable range.
double log_discount_exact(const rates::OuParams& p, double t);

/// exp(log_discount_exact); may be +infinity for strongly growing regimes.
double discount_exact(const rates::OuParams& p, double t);

/// d ln D / dt, evaluated analytically.
double log_discount_slope(const rates::OuParams& p, double t);

double r_infinity(const rates::OuParams& p);

/// Sign of mu - kappa^2/2 against `tol` decides the label.
RegimeLabel classify_regime(const NondimParams& nd, double tol = kDefaultRegimeTolerance);

/// Complementary error function.
double erfc(double x);

/// Stationary probability of a negative rate, Erfc(mu/kappa)/2.
/// For kappa = 0 the limit convention is 0 (mu > 0), 1 (mu < 0), 1/2 (mu = 0).
double prob_negative_stationary(const NondimParams& nd);

/// Stationary probability that r < r_inf, Erfc(sqrt((m - r_inf)/(2 alpha)))/2.
/// Returns 1/2 at k = 0, the kappa -> 0+ limit.
double prob_below_r_infinity(const rates::OuParams& p);

/// The same probability written as Erfc(kappa/2)/2.
double prob_below_r_infinity_nondim(const NondimParams& nd);

}  // namespace stochdisc::ou
