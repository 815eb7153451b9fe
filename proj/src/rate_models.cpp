#include "stochdisc/rate_models.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "stochdisc/errors.hpp"

namespace stochdisc::rates {

namespace {

void require(bool ok, const char* model, const char* what) {
  if (!ok) throw DomainError(std::string(model) + ": " + what);
}

// Variance of the OU transition over dt; -expm1 keeps small alpha*dt accurate.
double ou_transition_variance(const OuParams& p, double dt) {
  return p.k * p.k / (2.0 * p.alpha) * -std::expm1(-2.0 * p.alpha * dt);
}

}  // namespace

void check(const OuParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "OU", "alpha must be > 0");
  require(std::isfinite(p.k) && p.k >= 0.0, "OU", "k must be >= 0");
  require(std::isfinite(p.m), "OU", "m must be finite");
  require(std::isfinite(p.r0), "OU", "r0 must be finite");
}

void check(const FellerParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "Feller", "alpha must be > 0");
  require(std::isfinite(p.k) && p.k >= 0.0, "Feller", "k must be >= 0");
  require(std::isfinite(p.m) && p.m >= 0.0, "Feller", "m must be >= 0");
  require(std::isfinite(p.r0) && p.r0 >= 0.0, "Feller", "r0 must be >= 0");
}

void check(const LognormalParams& p) {
  require(std::isfinite(p.a), "Lognormal", "a must be finite");
  require(std::isfinite(p.b) && p.b >= 0.0, "Lognormal", "b must be >= 0");
  require(std::isfinite(p.r0) && p.r0 > 0.0, "Lognormal", "r0 must be > 0");
}

ValidatedModel validate(const ModelKind& params) {
  std::visit([](const auto& p) { check(p); }, params);
  return ValidatedModel(params);
}

std::string_view model_name(const ModelKind& params) noexcept {
  switch (params.index()) {
    case 0: return "ou";
    case 1: return "feller";
    default: return "lognormal";
  }
}

double initial_rate(const ModelKind& params) noexcept {
  return std::visit([](const auto& p) { return p.r0; }, params);
}

Moments stationary_stats(const OuParams& p) {
  check(p);
  return {p.m, p.k * p.k / (2.0 * p.alpha)};
}

Moments ou_transition_moments(const OuParams& p, double r, double dt) {
  return {p.m + (r - p.m) * std::exp(-p.alpha * dt), ou_transition_variance(p, dt)};
}

OuTransition::OuTransition(const OuParams& p, double dt)
    : m_(p.m), decay_(std::exp(-p.alpha * dt)), sd_(std::sqrt(ou_transition_variance(p, dt))) {}

double transition_sample(const OuParams& p, double r, double dt, double noise) {
  return OuTransition(p, dt)(r, noise);
}

double transition_step_feller(const FellerParams& p, double r, double dt, double noise) {
  const double rp = std::max(r, 0.0);
  const double next = r + p.alpha * (p.m - rp) * dt + p.k * std::sqrt(rp) * std::sqrt(dt) * noise;
  return std::max(next, 0.0);
}

double transition_step_lognormal(const LognormalParams& p, double r, double dt, double noise) {
  const double next = r * std::exp((p.a - 0.5 * p.b * p.b) * dt + p.b * std::sqrt(dt) * noise);
  // exp() can underflow for extreme draws; keep the rate strictly positive.
  return next > 0.0 ? next : std::numeric_limits<double>::denorm_min();
}

}  // namespace stochdisc::rates
