#pragma once

/**
 * @file rate_models.hpp
 * @brief Short-rate processes used for stochastic discounting.
 *
 * Three models are supported, all with rates as continuously compounded
 * annual log-rates in decimal units and time in years:
 *
 *   Ornstein-Uhlenbeck:  dr = -alpha (r - m) dt + k dW
 *   Feller (CIR):        dr = -alpha (r - m) dt + k sqrt(r) dW
 *   Log-normal (GBM):    dr = a r dt + b r dW
 *
 * The OU transition is sampled exactly. Feller uses a full-truncation Euler
 * step and the log-normal model an exact geometric step.
 */

#include <cmath>
#include <string_view>
#include <variant>

namespace stochdisc::rates {

struct OuParams {
  double m = 0.0;      ///< mean-reversion level (1/year)
  double alpha = 1.0;  ///< reversion strength (1/year)
  double k = 0.0;      ///< noise amplitude (year^-3/2)
  double r0 = 0.0;     ///< initial rate (1/year)
};

struct FellerParams {
  double m = 0.0;
  double alpha = 1.0;
  double k = 0.0;  ///< multiplies sqrt(r) dW
  double r0 = 0.0;
};

/// Geometric Brownian motion for the rate. `a` is the drift of r itself, so
/// the log-rate drifts at a - b^2/2.
struct LognormalParams {
  double a = 0.0;
  double b = 0.0;
  double r0 = 0.01;
};

using ModelKind = std::variant<OuParams, FellerParams, LognormalParams>;

/// A ModelKind whose invariants have been checked. Only `validate` builds one.
class ValidatedModel {
 public:
  const ModelKind& kind() const noexcept { return kind_; }
  bool is_ou() const noexcept { return std::holds_alternative<OuParams>(kind_); }

 private:
  explicit ValidatedModel(ModelKind kind) : kind_(kind) {}
  friend ValidatedModel validate(const ModelKind& params);

  ModelKind kind_;
};

/// Throws DomainError naming the violated invariant.
ValidatedModel validate(const ModelKind& params);

void check(const OuParams& p);
void check(const FellerParams& p);
void check(const LognormalParams& p);

std::string_view model_name(const ModelKind& params) noexcept;
double initial_rate(const ModelKind& params) noexcept;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Stationary law of the OU rate: N(m, k^2 / 2 alpha).
Moments stationary_stats(const OuParams& p);

/// Conditional law of r(t + dt) given r(t) = r.
Moments ou_transition_moments(const OuParams& p, double r, double dt);

/// Exact one-step OU transition with the per-step constants precomputed.
class OuTransition {
 public:
  OuTransition(const OuParams& p, double dt);

  double operator()(double r, double noise) const noexcept {
    return m_ + (r - m_) * decay_ + sd_ * noise;
  }

  double decay() const noexcept { return decay_; }
  double stddev() const noexcept { return sd_; }

 private:
  double m_;
  double decay_;
  double sd_;
};

double transition_sample(const OuParams& p, double r, double dt, double noise);

/// Full-truncation Euler step; the result is clamped at zero.
double transition_step_feller(const FellerParams& p, double r, double dt, double noise);

/// Exact geometric step; the result is always strictly positive.
double transition_step_lognormal(const LognormalParams& p, double r, double dt, double noise);

}  // namespace stochdisc::rates
