#include "stochdisc/mc_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "stochdisc/errors.hpp"

namespace stochdisc::mc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Running sums of exp(v) and exp(2v) held relative to the largest v seen, so
// that paths with very negative integrated rates cannot overflow.
struct ScaledSums {
  double shift = kNegInf;
  double s1 = 0.0;
  double s2 = 0.0;

  void add(double v) {
    if (v > shift) {
      if (shift != kNegInf) {
        const double f = std::exp(shift - v);
        s1 *= f;
        s2 *= f * f;
      }
      shift = v;
    }
    const double e = std::exp(v - shift);
    s1 += e;
    s2 += e * e;
  }

  void merge(const ScaledSums& o) {
    if (o.shift == kNegInf) return;
    if (shift == kNegInf) {
      *this = o;
      return;
    }
    const double top = std::max(shift, o.shift);
    const double fa = std::exp(shift - top);
    const double fb = std::exp(o.shift - top);
    s1 = s1 * fa + o.s1 * fb;
    s2 = s2 * fa * fa + o.s2 * fb * fb;
    shift = top;
  }
};

struct OuStep {
  rates::OuTransition tr;
  double operator()(double r, PathRng& g) const { return tr(r, g.normal()); }
};

struct FellerStep {
  rates::FellerParams p;
  double dt;
  double sqrt_dt;
  double operator()(double r, PathRng& g) const {
    const double rp = std::max(r, 0.0);
    const double next = r + p.alpha * (p.m - rp) * dt + p.k * std::sqrt(rp) * sqrt_dt * g.normal();
    return std::max(next, 0.0);
  }
};

struct LognormalStep {
  double drift;
  double vol;
  double operator()(double r, PathRng& g) const {
    const double next = r * std::exp(drift + vol * g.normal());
    return next > 0.0 ? next : std::numeric_limits<double>::denorm_min();
  }
};

template <class Fn>
decltype(auto) with_stepper(const rates::ModelKind& kind, double dt, Fn&& fn) {
  if (const auto* ou = std::get_if<rates::OuParams>(&kind)) {
    return fn(OuStep{rates::OuTransition(*ou, dt)});
  }
  if (const auto* fe = std::get_if<rates::FellerParams>(&kind)) {
    return fn(FellerStep{*fe, dt, std::sqrt(dt)});
  }
  const auto& ln = std::get<rates::LognormalParams>(kind);
  return fn(LognormalStep{(ln.a - 0.5 * ln.b * ln.b) * dt, ln.b * std::sqrt(dt)});
}

unsigned resolve_workers(unsigned requested, std::size_t n_tasks) {
  unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(n_tasks, 1)));
}

// Runs task(i) for i in [0, n_tasks) on `workers` threads. Tasks write to
// disjoint slots, so completion order does not matter.
template <class Task>
void run_tasks(std::size_t n_tasks, unsigned workers, Task&& task) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) task(i);
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers > 0 ? workers - 1 : 0);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
}

std::size_t steps_for(double t, double dt) { return static_cast<std::size_t>(std::llround(t / dt)); }

void check_budget(const McConfig& cfg) {
  const double steps = static_cast<double>(cfg.n_paths) * cfg.horizon / cfg.dt;
  if (steps > cfg.max_path_steps) {
    std::ostringstream os;
    os << "Monte Carlo budget exceeded: " << steps << " path steps > cap " << cfg.max_path_steps;
    throw BudgetError(os.str());
  }
}

std::vector<std::string> feller_checks(const rates::ValidatedModel& model, const McConfig& cfg) {
  std::vector<std::string> warnings;
  if (const auto* fe = std::get_if<rates::FellerParams>(&model.kind())) {
    if (cfg.dt > 0.1 / fe->alpha) {
      std::ostringstream os;
      os << "Feller step dt=" << cfg.dt << " exceeds 0.1/alpha=" << 0.1 / fe->alpha
         << "; full-truncation bias may be significant";
      if (!cfg.allow_coarse_feller) throw DomainError(os.str() + " (set allow_coarse_feller to override)");
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

}  // namespace

void validate(const McConfig& cfg) {
  if (cfg.n_paths < 2) throw DomainError("McConfig: n_paths must be >= 2");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw DomainError("McConfig: dt must be > 0");
  if (!(cfg.horizon >= cfg.dt) || !std::isfinite(cfg.horizon)) {
    throw DomainError("McConfig: horizon must be >= dt");
  }
  if (cfg.batch_size < 1) throw DomainError("McConfig: batch_size must be >= 1");
}

std::string_view to_string(CurveSource source) noexcept {
  return source == CurveSource::ClosedForm ? "closed-form" : "monte-carlo";
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

std::vector<double> uniform_times(double t_max, std::size_t n_points) {
  if (!(t_max > 0.0)) throw DomainError("uniform_times: t_max must be > 0");
  if (n_points < 2) throw DomainError("uniform_times: need at least 2 points");
  std::vector<double> times(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    times[i] = t_max * static_cast<double>(i) / static_cast<double>(n_points - 1);
  }
  return times;
}

DiscountCurve closed_form_curve(const rates::OuParams& p, std::span<const double> times) {
  rates::check(p);
  DiscountCurve curve;
  curve.source = CurveSource::ClosedForm;
  curve.model = p;
  if (times.empty() || times.front() != 0.0) curve.times.push_back(0.0);
  curve.times.insert(curve.times.end(), times.begin(), times.end());
  for (std::size_t i = 1; i < curve.times.size(); ++i) {
    if (!(curve.times[i] > curve.times[i - 1])) throw DomainError("curve times must be strictly increasing");
  }
  for (double t : curve.times) {
    const double lnd = ou::log_discount_exact(p, t);
    const double d = std::exp(lnd);
    curve.saturated = curve.saturated || !std::isfinite(d);
    curve.log_d_values.push_back(lnd);
    curve.d_values.push_back(d);
    curve.std_errors.push_back(0.0);
  }
  return curve;
}

DiscountCurve estimate_discount(const rates::ValidatedModel& model, const McConfig& cfg,
                                std::span<const double> sample_times) {
  validate(cfg);
  check_budget(cfg);

  DiscountCurve curve;
  curve.source = CurveSource::MonteCarlo;
  curve.model = model.kind();
  curve.warnings = feller_checks(model, cfg);

  if (sample_times.empty() || sample_times.front() != 0.0) curve.times.push_back(0.0);
  curve.times.insert(curve.times.end(), sample_times.begin(), sample_times.end());

  std::vector<std::size_t> sample_steps;
  sample_steps.reserve(curve.times.size());
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double t = curve.times[i];
    if (i > 0 && !(t > curve.times[i - 1])) throw DomainError("sample times must be strictly increasing");
    if (t > cfg.horizon * (1.0 + 1e-12)) throw DomainError("sample time beyond horizon");
    const double ratio = t / cfg.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw DomainError("sample times must be multiples of dt");
    }
    sample_steps.push_back(steps_for(t, cfg.dt));
  }

  const std::size_t n_batches = (cfg.n_paths + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t n_samples = sample_steps.size();
  std::vector<std::vector<ScaledSums>> partial(n_batches, std::vector<ScaledSums>(n_samples));
  const double r0 = rates::initial_rate(model.kind());
  const double dt = cfg.dt;
  const double half_dt = 0.5 * dt;

  with_stepper(model.kind(), dt, [&](auto step) {
    auto batch = [&](std::size_t b) {
      auto& acc = partial[b];
      const std::size_t first = b * cfg.batch_size;
      const std::size_t last = std::min(cfg.n_paths, first + cfg.batch_size);
      for (std::size_t path = first; path < last; ++path) {
        PathRng rng(cfg.seed, path);
        double r = r0;
        double x = 0.0;
        std::size_t step_index = 0;
        for (std::size_t j = 0; j < n_samples; ++j) {
          for (; step_index < sample_steps[j]; ++step_index) {
            const double next = step(r, rng);
            x += half_dt * (r + next);
            r = next;
          }
          acc[j].add(-x);
        }
      }
    };
    run_tasks(n_batches, resolve_workers(cfg.workers, n_batches), batch);
  });

  const double n = static_cast<double>(cfg.n_paths);
  for (std::size_t j = 0; j < n_samples; ++j) {
    ScaledSums total;
    for (std::size_t b = 0; b < n_batches; ++b) total.merge(partial[b][j]);
    const double mean_scaled = total.s1 / n;
    const double var_scaled = std::max(0.0, total.s2 / n - mean_scaled * mean_scaled) * n / (n - 1.0);
    const double lnd = total.shift + std::log(mean_scaled);
    const double scale = std::exp(total.shift);
    const double d = scale * mean_scaled;
    curve.saturated = curve.saturated || !std::isfinite(d);
    curve.log_d_values.push_back(lnd);
    curve.d_values.push_back(d);
    curve.std_errors.push_back(scale * std::sqrt(var_scaled / n));
  }
  // Every path contributes exp(0) at t = 0.
  curve.d_values.front() = 1.0;
  curve.log_d_values.front() = 0.0;
  curve.std_errors.front() = 0.0;
  return curve;
}

LongRunFit classify_longrun_empirical(const DiscountCurve& curve) {
  if (curve.size() < 2) throw DomainError("classify_longrun_empirical: curve too short");
  const double t0 = curve.times.front();
  const double t1 = curve.times.back();
  const double cut = t1 - (t1 - t0) / 3.0;

  std::vector<double> ts, ys, ss;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.times[i] + 1e-12 * std::abs(t1) < cut) continue;
    ts.push_back(curve.times[i]);
    ys.push_back(curve.log_d_values[i]);
    const double se = curve.std_errors[i];
    // Relative error of D is the absolute error of ln D to first order.
    ss.push_back(se > 0.0 ? se / curve.d_values[i] : 0.0);
  }
  if (ts.size() < 10) {
    throw DomainError("classify_longrun_empirical: need >= 10 points in the final third of the horizon");
  }

  const double n = static_cast<double>(ts.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - tm) * (ts[i] - tm);
    sxy += (ts[i] - tm) * (ys[i] - ym);
  }
  const double slope = sxy / sxx;
  double var = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double w = (ts[i] - tm) / sxx;
    var += w * w * ss[i] * ss[i];
  }

  LongRunFit fit;
  fit.slope = slope;
  fit.rate = -slope;
  fit.slope_stderr = std::isfinite(var) ? std::sqrt(var) : std::numeric_limits<double>::infinity();
  fit.points = ts.size();
  const double threshold = 2.0 * fit.slope_stderr;
  fit.label.tolerance = threshold;
  if (std::abs(slope) <= threshold) {
    fit.inconclusive = true;
    fit.label.regime = ou::Regime::AsymptoticallyConstant;
  } else {
    fit.label.regime = slope < 0.0 ? ou::Regime::ExponentialDecay : ou::Regime::ExponentialGrowth;
  }
  return fit;
}

Occupancy negative_rate_occupancy(const rates::ValidatedModel& model, const McConfig& cfg) {
  validate(cfg);
  check_budget(cfg);
  feller_checks(model, cfg);

  Occupancy occ;
  if (const auto* ou = std::get_if<rates::OuParams>(&model.kind())) {
    occ.burn_in = 5.0 / ou->alpha;
  } else if (const auto* fe = std::get_if<rates::FellerParams>(&model.kind())) {
    occ.burn_in = 5.0 / fe->alpha;
  }

  const std::size_t n_steps = steps_for(cfg.horizon, cfg.dt);
  std::size_t first_counted = static_cast<std::size_t>(std::ceil(occ.burn_in / cfg.dt - 1e-9));
  first_counted = std::max<std::size_t>(first_counted, 1);
  if (first_counted > n_steps) throw DomainError("negative_rate_occupancy: horizon shorter than burn-in");

  const std::size_t n_batches = (cfg.n_paths + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::size_t> negatives(n_batches, 0);
  const double r0 = rates::initial_rate(model.kind());

  with_stepper(model.kind(), cfg.dt, [&](auto step) {
    auto batch = [&](std::size_t b) {
      const std::size_t first = b * cfg.batch_size;
      const std::size_t last = std::min(cfg.n_paths, first + cfg.batch_size);
      std::size_t count = 0;
      for (std::size_t path = first; path < last; ++path) {
        PathRng rng(cfg.seed, path);
        double r = r0;
        for (std::size_t i = 1; i <= n_steps; ++i) {
          r = step(r, rng);
          if (i >= first_counted && r < 0.0) ++count;
        }
      }
      negatives[b] = count;
    };
    run_tasks(n_batches, resolve_workers(cfg.workers, n_batches), batch);
  });

  std::size_t total = 0;
  for (auto c : negatives) total += c;
  occ.samples = cfg.n_paths * (n_steps - first_counted + 1);
  occ.probability = static_cast<double>(total) / static_cast<double>(occ.samples);
  occ.binomial_stderr = std::sqrt(occ.probability * (1.0 - occ.probability) / static_cast<double>(occ.samples));
  return occ;
}

std::vector<double> simulate_rate_path(const rates::ValidatedModel& model, double dt, std::size_t n_steps,
                                       std::uint64_t seed, std::uint64_t stream) {
  if (!(dt > 0.0)) throw DomainError("simulate_rate_path: dt must be > 0");
  std::vector<double> path(n_steps + 1);
  path[0] = rates::initial_rate(model.kind());
  with_stepper(model.kind(), dt, [&](auto step) {
    PathRng rng(seed, stream);
    for (std::size_t i = 1; i <= n_steps; ++i) path[i] = step(path[i - 1], rng);
  });
  return path;
}

double trapezoid_integral(std::span<const double> rates, double dt) {
  if (rates.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < rates.size(); ++i) sum += 0.5 * dt * (rates[i - 1] + rates[i]);
  return sum;
}

}  // namespace stochdisc::mc
