#include "stochdisc/ou_analytics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "stochdisc/errors.hpp"

namespace stochdisc::ou {

namespace {

// Below this tau the closed forms of g and h lose digits to cancellation.
constexpr double kSeriesCutoff = 0.1;
constexpr int kSeriesTerms = 18;

double saturate(double x) {
  if (std::isnan(x)) return x;
  if (x > std::numeric_limits<double>::max()) return std::numeric_limits<double>::infinity();
  if (x < -std::numeric_limits<double>::max()) return -std::numeric_limits<double>::infinity();
  return x;
}

}  // namespace

NondimParams nondimensionalize(const rates::OuParams& p) {
  rates::check(p);
  return {p.m / p.alpha, p.k / std::pow(p.alpha, 1.5), p.alpha};
}

rates::OuParams dimensionalize(const NondimParams& nd, std::optional<double> r0) {
  if (!(nd.alpha > 0.0)) throw DomainError("NondimParams: alpha must be > 0");
  if (!(nd.kappa >= 0.0)) throw DomainError("NondimParams: kappa must be >= 0");
  const double m = nd.mu * nd.alpha;
  return {m, nd.alpha, nd.kappa * std::pow(nd.alpha, 1.5), r0.value_or(m)};
}

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::ExponentialDecay: return "ExponentialDecay";
    case Regime::ExponentialGrowth: return "ExponentialGrowth";
    default: return "AsymptoticallyConstant";
  }
}

std::optional<Regime> parse_regime(std::string_view text) noexcept {
  for (auto r : {Regime::ExponentialDecay, Regime::AsymptoticallyConstant, Regime::ExponentialGrowth}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

double fluctuation_bracket(double tau) {
  if (tau < kSeriesCutoff) {
    // g(tau) = sum_{n>=3} (2 - 2^{n-1}) (-tau)^n / n!
    double term = -tau;  // (-tau)^n / n! at n = 1
    double pow2 = 1.0;   // 2^{n-1}
    double sum = 0.0;
    for (int n = 2; n <= kSeriesTerms; ++n) {
      term *= -tau / n;
      pow2 *= 2.0;
      sum += (2.0 - pow2) * term;
    }
    return sum;
  }
  const double e1 = -std::expm1(-tau);
  const double e2 = -std::expm1(-2.0 * tau);
  return tau - 2.0 * e1 + 0.5 * e2;
}

double drift_bracket(double tau) {
  if (tau < kSeriesCutoff) {
    // h(tau) = sum_{n>=2} (-tau)^n / n!
    double term = -tau;
    double sum = 0.0;
    for (int n = 2; n <= kSeriesTerms; ++n) {
      term *= -tau / n;
      sum += term;
    }
    return sum;
  }
  return tau + std::expm1(-tau);
}

double log_discount_exact(const rates::OuParams& p, double t) {
  rates::check(p);
  if (!(t >= 0.0)) throw DomainError("log_discount_exact: t must be >= 0");
  if (t == 0.0) return 0.0;
  const auto nd = nondimensionalize(p);
  const double tau = p.alpha * t;
  const double relax = -std::expm1(-tau);
  const double value = -(p.r0 / p.alpha) * relax + 0.5 * nd.kappa * nd.kappa * fluctuation_bracket(tau) -
                       nd.mu * drift_bracket(tau);
  return saturate(value);
}

double discount_exact(const rates::OuParams& p, double t) { return std::exp(log_discount_exact(p, t)); }

double log_discount_slope(const rates::OuParams& p, double t) {
  rates::check(p);
  const auto nd = nondimensionalize(p);
  const double relax = -std::expm1(-p.alpha * t);
  return -p.r0 * std::exp(-p.alpha * t) + 0.5 * nd.kappa * nd.kappa * p.alpha * relax * relax -
         nd.mu * p.alpha * relax;
}

double r_infinity(const rates::OuParams& p) {
  rates::check(p);
  return p.m - p.k * p.k / (2.0 * p.alpha * p.alpha);
}

RegimeLabel classify_regime(const NondimParams& nd, double tol) {
  if (!(tol >= 0.0)) throw DomainError("classify_regime: tolerance must be >= 0");
  const double margin = nd.mu - 0.5 * nd.kappa * nd.kappa;
  if (margin > tol) return {Regime::ExponentialDecay, tol};
  if (margin < -tol) return {Regime::ExponentialGrowth, tol};
  return {Regime::AsymptoticallyConstant, tol};
}

double erfc(double x) { return std::erfc(x); }

double prob_negative_stationary(const NondimParams& nd) {
  if (!(nd.kappa >= 0.0)) throw DomainError("prob_negative_stationary: kappa must be >= 0");
  if (nd.kappa == 0.0) {
    if (nd.mu > 0.0) return 0.0;
    if (nd.mu < 0.0) return 1.0;
    return 0.5;
  }
  return 0.5 * erfc(nd.mu / nd.kappa);
}

double prob_below_r_infinity(const rates::OuParams& p) {
  rates::check(p);
  const double gap = p.m - r_infinity(p);
  return 0.5 * erfc(std::sqrt(gap / (2.0 * p.alpha)));
}

double prob_below_r_infinity_nondim(const NondimParams& nd) {
  if (!(nd.kappa >= 0.0)) throw DomainError("prob_below_r_infinity: kappa must be >= 0");
  return 0.5 * erfc(0.5 * nd.kappa);
}

}  // namespace stochdisc::ou
