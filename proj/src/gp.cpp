#include "dks/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "dks/errors.hpp"

namespace dks {

namespace {

bool all_finite(std::span<const Complex> a) {
  for (const auto& v : a)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

std::int64_t steps_for(double span, double dt) {
  return static_cast<std::int64_t>(std::llround(span / dt));
}

// Real roots of x^3 + a x^2 + b x + c, ascending.
std::vector<double> cubic_roots(double a, double b, double c) {
  const double q = (a * a - 3 * b) / 9;
  const double r = (2 * a * a * a - 9 * a * b + 27 * c) / 54;
  std::vector<double> roots;
  if (r * r < q * q * q) {
    const double theta = std::acos(r / std::sqrt(q * q * q));
    const double s = -2 * std::sqrt(q);
    for (int k = 0; k < 3; ++k)
      roots.push_back(s * std::cos((theta + 2 * constants::pi * k) / 3) - a / 3);
  } else {
    const double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q * q * q)), r);
    const double small = big == 0 ? 0 : q / big;
    roots.push_back(big + small - a / 3);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

GpStepper::GpStepper(const ModelParams& model, double dt, Scheme scheme, double linear_shift)
    : modes_(model.modes),
      dt_(dt),
      scheme_(scheme),
      g_(model.g),
      drive_term_(0, -0.5 * model.kappa * model.drive),
      center_(model.max_mode()),
      sigma_(detuning_profile(model)),
      kappa_(model.kappa),
      shift_(linear_shift),
      half_(sigma_, model.kappa, 0.5 * dt, linear_shift),
      kernel_(model.modes),
      k1_(model.modes),
      mid_(model.modes) {
  if (!(dt > 0)) fail(ErrorKind::domain, "time step must be positive");
}

void GpStepper::nonlinear_rhs(std::span<const Complex> a, std::span<Complex> out) {
  if (g_ != 0) {
    kernel_.apply(a, out, g_);
    for (auto& v : out) v = Complex(-v.imag(), v.real());  // multiply by i
  } else {
    std::fill(out.begin(), out.end(), Complex{});
  }
  out[center_] += drive_term_;
}

void GpStepper::step(std::span<Complex> a) {
  if (scheme_ == Scheme::split_step) {
    half_.apply(a);
    nonlinear_rhs(a, k1_);
    const double h = 0.5 * dt_;
    for (int i = 0; i < modes_; ++i) mid_[i] = a[i] + h * k1_[i];
    nonlinear_rhs(mid_, k1_);
    for (int i = 0; i < modes_; ++i) a[i] += dt_ * k1_[i];
    half_.apply(a);
  } else {
    nonlinear_rhs(a, k1_);
    for (int i = 0; i < modes_; ++i) {
      const Complex lin(-0.5 * kappa_, sigma_[i] + shift_);
      a[i] += dt_ * (lin * a[i] + k1_[i]);
    }
  }
}

ModeField gp_step(const ModeField& field, const ModelParams& model, double dt, Scheme scheme) {
  model.validate();
  if (field.modes() != model.modes) fail(ErrorKind::domain, "field and model differ in mode count");
  GpStepper stepper(model, dt, scheme);
  ModeField out = field;
  stepper.step(out.amplitudes);
  if (!all_finite(out.amplitudes)) throw DivergenceError(0, -1, "GP step produced NaN/Inf at step 0");
  out.time += dt;
  return out;
}

namespace {

GpRun evolve_once(const ModeField& start, const ModelParams& model, double t_end, double cadence,
                  const GpOptions& opt, double dt) {
  const std::int64_t n_steps = steps_for(t_end - start.time, dt);
  const std::int64_t tick_every = std::max<std::int64_t>(1, steps_for(cadence, dt));
  const std::int64_t field_every =
      opt.field_cadence > 0 ? std::max<std::int64_t>(1, steps_for(opt.field_cadence, dt)) : 0;

  GpRun run;
  run.dt_used = dt;
  run.field = start;
  auto& meta = run.record.meta;
  meta.kind = "gp";
  meta.modes = model.modes;
  meta.grid = opt.grid;
  meta.n_tilde = model.n_tilde;
  meta.co_rotating = model.co_rotating;
  meta.d1 = model.d1;
  meta.dt = dt;
  meta.model_hash = model_hash(model);
  meta.n_traj = 1;
  meta.vacuum_subtracted = false;

  GpStepper stepper(model, dt, opt.scheme);
  EnsembleObserver::Options oo;
  oo.grid = opt.grid;
  oo.vacuum_subtract = false;
  oo.keep_density = opt.keep_density;
  EnsembleObserver observer(model.modes, 1, 1.0, oo);
  RealSpaceTransform transform(model.modes, opt.grid);

  const double t0 = start.time;
  auto& amps = run.field.amplitudes;
  for (std::int64_t s = 0;; ++s) {
    const double t = t0 + s * dt;
    if (s % tick_every == 0) {
      observer.observe(0, amps, transform);
      run.record.push(observer.reduce(t));
    }
    if (field_every && s % field_every == 0 && t >= opt.field_start - 0.5 * dt)
      run.record.push_field({t, amps});
    if (s == n_steps) break;
    stepper.step(amps);
    if (!all_finite(amps)) {
      std::ostringstream os;
      os << "GP integration diverged at step " << s + 1 << " (dt = " << dt << ")";
      throw DivergenceError(s + 1, -1, os.str());
    }
  }
  run.field.time = t0 + n_steps * dt;
  return run;
}

}  // namespace

GpRun evolve_gp(const ModeField& field, const ModelParams& model, double t_end, double cadence,
                const GpOptions& options) {
  model.validate();
  if (field.modes() != model.modes) fail(ErrorKind::domain, "field and model differ in mode count");
  if (!(t_end > field.time)) fail(ErrorKind::domain, "t_end must exceed the field time");
  if (!(cadence >= options.dt)) fail(ErrorKind::domain, "cadence must be at least one time step");
  double dt = options.dt;
  for (int attempt = 0;; ++attempt) {
    try {
      return evolve_once(field, model, t_end, cadence, options, dt);
    } catch (const DivergenceError&) {
      if (attempt >= options.max_halvings) throw;
      dt *= 0.5;
    }
  }
}

bool check_stationarity(const TimeSeriesRecord& record, double window, double tol) {
  if (record.size() < 2) fail(ErrorKind::domain, "insufficient data: record has fewer than 2 ticks");
  const auto& ticks = record.ticks();
  const double span = ticks.back().t - ticks.front().t;
  if (span < 2 * window * (1 - 1e-12))
    fail(ErrorKind::domain, "insufficient data: record spans less than twice the window");
  const Tick& last = ticks.back();
  double peak = 0;
  for (double v : last.occupation) peak = std::max(peak, std::abs(v));
  const double floor = 1e-12 * peak;
  for (auto it = ticks.rbegin(); it != ticks.rend() && it->t >= last.t - window; ++it) {
    for (std::size_t i = 0; i < last.occupation.size(); ++i) {
      const double ref = std::max(std::abs(last.occupation[i]), floor);
      if (ref == 0) continue;
      if (std::abs(it->occupation[i] - last.occupation[i]) / ref >= tol) return false;
    }
  }
  return true;
}

Complex homogeneous_state(const ModelParams& model) {
  // n ((sigma0 + g n)^2 + kappa^2/4) = (kappa F / 2)^2, smallest root.
  const double k = model.kappa, s = model.sigma0, F = model.drive, g = model.g;
  double n;
  if (g == 0) {
    n = 0.25 * k * k * F * F / (s * s + 0.25 * k * k);
  } else {
    // in rho = 2 g n / kappa, zeta = -2 sigma0 / kappa, f2 = 2 g F^2 / kappa
    const double zeta = -2 * s / k, f2 = 2 * g * F * F / k;
    const auto roots = cubic_roots(-2 * zeta, 1 + zeta * zeta, -f2);
    double rho = roots.front();
    for (double r : roots)
      if (r >= 0) {
        rho = r;
        break;
      }
    n = rho * k / (2 * g);
  }
  return Complex(0.5 * k * F, 0) / Complex(s + g * n, 0.5 * k);
}

ModeField sech_seed(const ModelParams& model, double width) {
  const double zeta = -2 * model.sigma0 / model.kappa;
  const double f = std::sqrt(2 * model.g * model.drive * model.drive / model.kappa);
  const double z = std::max(zeta, 1e-3);
  if (width <= 0) width = std::sqrt(model.d2 / (model.kappa * z));
  const double amplitude = std::sqrt(2 * z) * std::sqrt(model.kappa / (2 * model.g));
  const double cos_phi = std::min(1.0, std::sqrt(8 * z) / (constants::pi * std::max(f, 1e-12)));
  const Complex phase = std::polar(1.0, std::acos(cos_phi)) * Complex(0, -1);
  const Complex background = homogeneous_state(model);

  const int grid = std::max(1024, 8 * model.modes);
  RealSpaceField psi;
  psi.values.resize(grid);
  const double norm = 1 / std::sqrt(2 * constants::pi);
  for (int k = 0; k < grid; ++k) {
    double theta = 2 * constants::pi * k / grid;
    if (theta > constants::pi) theta -= 2 * constants::pi;
    const Complex field = background + amplitude * phase / std::cosh(theta / width);
    psi.values[k] = norm * field;
  }
  return project_to_modes(psi, model.modes);
}

int count_density_peaks(std::span<const double> density) {
  const int n = static_cast<int>(density.size());
  double mean = 0, peak = density[0];
  for (double v : density) {
    mean += v;
    peak = std::max(peak, v);
  }
  mean /= n;
  const double level = mean + 0.5 * (peak - mean);
  // Count connected arcs above the level on the periodic grid.
  int start = 0;
  while (start < n && density[start] > level) ++start;
  if (start == n) return 0;
  int arcs = 0;
  bool inside = false;
  for (int j = 1; j <= n; ++j) {
    const bool above = density[(start + j) % n] > level;
    if (above && !inside) ++arcs;
    inside = above;
  }
  return arcs;
}

ModeField prepare_soliton(const ModelParams& model, const SeedSpec& seed,
                          const SolitonOptions& options, TimeSeriesRecord* convergence) {
  model.validate();
  model.require_anomalous_dispersion();
  const Threshold thr = soliton_threshold(model);
  if (!thr.above) {
    std::ostringstream os;
    os << "drive F = " << model.drive << " is not above the soliton threshold F_thr = "
       << thr.drive_threshold;
    fail(ErrorKind::domain, os.str());
  }

  double width = seed.width;
  for (int narrowing = 0;; ++narrowing) {
    ModeField field;
    if (seed.kind == SeedSpec::Kind::stored) {
      if (!seed.stored) fail(ErrorKind::config, "stored seed selected but no field supplied");
      field = *seed.stored;
      if (field.modes() != model.modes) fail(ErrorKind::domain, "stored seed has the wrong mode count");
    } else {
      field = sech_seed(model, width);
    }
    field.time = 0;

    const double cadence = std::max(options.gp.dt, 0.25);
    GpRun run = evolve_gp(field, model, options.t_relax, cadence, options.gp);
    int extension = 0;
    while (!check_stationarity(run.record, options.window, options.tol)) {
      if (++extension > options.max_extensions)
        fail(ErrorKind::convergence, "soliton did not become stationary within " +
                                         std::to_string((extension)*options.t_relax) + "/kappa");
      GpRun more = evolve_gp(run.field, model, run.field.time + options.t_relax, cadence, options.gp);
      run.field = more.field;
      for (const auto& t : more.record.ticks())
        if (t.t > run.record.ticks().back().t) run.record.push(t);
    }

    Tick tick = observe_field(run.field, options.gp.grid, true);
    const int peaks = count_density_peaks(tick.density);
    if (peaks == 1 && tick.contrast > 1 + 1e-6) {
      if (convergence) *convergence = std::move(run.record);
      run.field.time = 0;
      return run.field;
    }
    if (peaks == 0 || tick.contrast <= 1 + 1e-6)
      fail(ErrorKind::convergence, "seed relaxed to the homogeneous state; no soliton formed");
    if (seed.kind == SeedSpec::Kind::stored || narrowing >= options.max_narrowing)
      fail(ErrorKind::convergence,
           "multi-soliton state detected (" + std::to_string(peaks) + " peaks)");
    if (width <= 0) {
      const double zeta = std::max(-2 * model.sigma0 / model.kappa, 1e-3);
      width = std::sqrt(model.d2 / (model.kappa * zeta));
    }
    width *= 0.5;
  }
}

}  // namespace dks
