#pragma once

/**
 * @file mc_engine.hpp
 * @brief Monte Carlo evaluation of D(t) = E[exp(-int_0^t r)] for any rate model.
 *
 * Each path owns a random stream derived from (seed, path index), and paths
 * are grouped into fixed batches whose partial sums are reduced in batch
 * order. Results are therefore bit-identical for any worker count.
 */

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stochdisc/ou_analytics.hpp"
#include "stochdisc/rate_models.hpp"

namespace stochdisc::mc {

struct McConfig {
  std::size_t n_paths = 100'000;
  double dt = 1.0 / 64.0;         ///< years
  double horizon = 100.0;         ///< years
  std::uint64_t seed = 20140701;
  std::size_t batch_size = 1024;  ///< paths per reduction unit
  unsigned workers = 0;           ///< 0 selects hardware concurrency
  double max_path_steps = 2e10;   ///< cap on n_paths * horizon / dt
  bool allow_coarse_feller = false;
};

/// Throws DomainError on a violated McConfig invariant.
void validate(const McConfig& cfg);

enum class CurveSource { ClosedForm, MonteCarlo };

std::string_view to_string(CurveSource source) noexcept;

struct DiscountCurve {
  std::vector<double> times;         ///< years, ascending, times[0] == 0
  std::vector<double> d_values;      ///< D(t); may be +inf when saturated
  std::vector<double> std_errors;    ///< zero for closed-form curves
  std::vector<double> log_d_values;  ///< ln D(t), finite even when D overflows
  CurveSource source = CurveSource::ClosedForm;
  rates::ModelKind model;
  bool saturated = false;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return times.size(); }
};

/// Counter-based per-path normal stream.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream);
  double normal() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

/// n_points equally spaced times on [0, t_max], endpoints included.
std::vector<double> uniform_times(double t_max, std::size_t n_points);

DiscountCurve closed_form_curve(const rates::OuParams& p, std::span<const double> times);

/// Sample times must be multiples of cfg.dt within cfg.horizon. t = 0 is
/// prepended when absent.
DiscountCurve estimate_discount(const rates::ValidatedModel& model, const McConfig& cfg,
                                std::span<const double> sample_times);

struct LongRunFit {
  ou::RegimeLabel label;
  double rate = 0.0;          ///< -slope of ln D over the final third
  double slope = 0.0;
  double slope_stderr = 0.0;  ///< propagated from per-point standard errors
  bool inconclusive = false;  ///< |slope| <= 2 * slope_stderr
  std::size_t points = 0;
};

LongRunFit classify_longrun_empirical(const DiscountCurve& curve);

struct Occupancy {
  double probability = 0.0;
  std::size_t samples = 0;
  double binomial_stderr = 0.0;
  double burn_in = 0.0;
};

/// Fraction of (path, step) samples with r < 0 after a burn-in of 5/alpha.
Occupancy negative_rate_occupancy(const rates::ValidatedModel& model, const McConfig& cfg);

/// One rate path r(0), r(dt), ..., r(n_steps dt) on stream `stream`.
std::vector<double> simulate_rate_path(const rates::ValidatedModel& model, double dt,
                                       std::size_t n_steps, std::uint64_t seed,
                                       std::uint64_t stream = 0);

/// Trapezoid rule over uniformly spaced rates.
double trapezoid_integral(std::span<const double> rates, double dt);

}  // namespace stochdisc::mc
