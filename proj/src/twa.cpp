#include "dks/twa.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "dks/errors.hpp"

namespace dks {

namespace {

bool finite(std::span<const Complex> a) {
  for (const auto& v : a)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void check_binding(const Ensemble& ens, const ModelParams& model) {
  model.validate();
  ens.validate();
  if (ens.model_hash != model_hash(model))
    fail(ErrorKind::config, "ensemble was sampled for a different model (hash mismatch)");
  if (ens.modes() != model.modes) fail(ErrorKind::config, "ensemble and model differ in mode count");
  if (!(ens.n_tilde > 0)) fail(ErrorKind::domain, "ensemble N~ must be positive");
}

// Everything a trajectory step needs; one per worker.
struct TrajectoryStepper {
  TrajectoryStepper(const ModelParams& model, const Ensemble& ens, const TwaOptions& opt, double dt)
      : gp(model, dt, Scheme::split_step, opt.wigner_shift ? -model.g / ens.n_tilde : 0.0),
        policy(ens.master_seed),
        amplitude(opt.noise ? std::sqrt(model.kappa * dt / (2 * ens.n_tilde)) : 0.0) {}

  void advance(std::span<Complex> a, int trajectory, std::int64_t step) {
    gp.step(a);
    if (amplitude != 0) {
      const auto key = policy.key_for(static_cast<std::uint64_t>(trajectory));
      for (std::size_t i = 0; i < a.size(); ++i)
        a[i] += amplitude * NoisePolicy::normal_with_key(key, static_cast<std::uint64_t>(step),
                                                         static_cast<std::uint32_t>(i),
                                                         NoisePolicy::Stream::step);
    }
    if (!finite(a)) {
      std::ostringstream os;
      os << "TWA trajectory " << trajectory << " diverged at step " << step + 1;
      throw DivergenceError(step + 1, trajectory, os.str());
    }
  }

  GpStepper gp;
  NoisePolicy policy;
  double amplitude;
};

std::int64_t to_steps(double span, double dt) {
  return static_cast<std::int64_t>(std::llround(span / dt));
}

}  // namespace

Ensemble sample_initial(const ModeField& gp_field, double n_tilde, int n_traj,
                        const NoisePolicy& policy, std::uint64_t hash) {
  if (!(n_tilde > 0) || !std::isfinite(n_tilde)) fail(ErrorKind::domain, "N~ must be positive");
  if (n_traj < 2) fail(ErrorKind::domain, "an ensemble needs at least 2 trajectories");
  Ensemble ens;
  ens.n_tilde = n_tilde;
  ens.model_hash = hash;
  ens.master_seed = policy.master_seed();
  ens.step = 0;
  ens.time = 0;
  const double spread = 1 / std::sqrt(2 * n_tilde);
  ens.trajectories.assign(n_traj, ModeField(gp_field.modes(), 0.0));
  for (int mu = 0; mu < n_traj; ++mu) {
    const auto key = policy.key_for(static_cast<std::uint64_t>(mu));
    auto& a = ens.trajectories[mu].amplitudes;
    for (int i = 0; i < gp_field.modes(); ++i)
      a[i] = gp_field.amplitudes[i] +
             spread * NoisePolicy::normal_with_key(key, 0, static_cast<std::uint32_t>(i),
                                                   NoisePolicy::Stream::initial);
  }
  return ens;
}

void twa_step(Ensemble& ens, const ModelParams& model, double dt, const TwaOptions& options) {
  check_binding(ens, model);
  TrajectoryStepper stepper(model, ens, options, dt);
  for (int mu = 0; mu < ens.size(); ++mu) stepper.advance(ens.trajectories[mu].amplitudes, mu, ens.step);
  ++ens.step;
  ens.time = ens.step * dt;
  for (auto& f : ens.trajectories) f.time = ens.time;
}

bool evolve_twa(Ensemble& ens, const ModelParams& model, double t_end, double cadence,
                TimeSeriesRecord& recorder, const TwaOptions& opt) {
  check_binding(ens, model);
  const double dt = opt.dt;
  if (!(dt > 0)) fail(ErrorKind::domain, "time step must be positive");
  if (!(cadence >= dt * (1 - 1e-9))) fail(ErrorKind::domain, "cadence must be at least one time step");
  const std::int64_t end_step = to_steps(t_end, dt);
  if (end_step <= ens.step) fail(ErrorKind::domain, "t_end must exceed the ensemble time");

  const std::int64_t tick_every = std::max<std::int64_t>(1, to_steps(cadence, dt));
  const std::int64_t field_every =
      opt.field_cadence > 0 ? std::max<std::int64_t>(1, to_steps(opt.field_cadence, dt)) : 0;
  const std::int64_t ckpt_every =
      opt.checkpoint_every > 0 ? std::max<std::int64_t>(1, to_steps(opt.checkpoint_every, dt)) : 0;
  const std::int64_t start_step = ens.step;

  if (recorder.empty() && recorder.field_samples().empty()) {
    auto& m = recorder.meta;
    m.kind = "twa";
    m.modes = model.modes;
    m.grid = opt.grid;
    m.n_tilde = ens.n_tilde;
    m.co_rotating = model.co_rotating;
    m.d1 = model.d1;
    m.dt = dt;
    m.model_hash = ens.model_hash;
    m.seed = ens.master_seed;
    m.n_traj = ens.size();
    m.vacuum_subtracted = opt.vacuum_subtract;
  }

  EnsembleObserver::Options oo;
  oo.grid = opt.grid;
  oo.vacuum_subtract = opt.vacuum_subtract;
  oo.keep_density = opt.keep_density;
  EnsembleObserver observer(ens.modes(), ens.size(), ens.n_tilde, oo);

  auto tick_due = [&](std::int64_t s) { return s % tick_every == 0; };
  auto field_due = [&](std::int64_t s) {
    return field_every && s % field_every == 0 && s * dt >= opt.field_start - 0.5 * dt;
  };
  auto next_multiple = [](std::int64_t s, std::int64_t every) { return (s / every + 1) * every; };
  auto next_event = [&](std::int64_t s) {
    std::int64_t n = std::min(end_step, next_multiple(s, tick_every));
    if (field_every) n = std::min(n, next_multiple(s, field_every));
    if (ckpt_every) n = std::min(n, next_multiple(s, ckpt_every));
    return n;
  };

  bool stopped = false;
  // Serial bookkeeping at an event step; all trajectories sit at step s.
  auto serve_event = [&](std::int64_t s) {
    const double t = s * dt;
    ens.step = s;
    ens.time = t;
    for (auto& f : ens.trajectories) f.time = t;
    if (tick_due(s) && (recorder.empty() || recorder.ticks().back().t < t)) {
      if (recorder.size() >= opt.max_ticks) fail(ErrorKind::io, "recorder overflow");
      recorder.push(observer.reduce(t));
    }
    if (field_due(s) && (recorder.field_samples().empty() || recorder.field_samples().back().t < t))
      recorder.push_field({t, EnsembleObserver::mean_modes(ens)});
    if (ckpt_every && s % ckpt_every == 0 && s != start_step && s != end_step && opt.on_checkpoint)
      if (!opt.on_checkpoint(ens, recorder)) stopped = true;
  };

  {
    RealSpaceTransform transform(ens.modes(), opt.grid);
    if (tick_due(start_step))
      for (int mu = 0; mu < ens.size(); ++mu) observer.observe(mu, ens.trajectories[mu].amplitudes, transform);
    serve_event(start_step);
  }
  if (stopped) return false;

  const int workers = std::clamp(opt.workers, 1, ens.size());
  std::vector<int> chunk(workers + 1);
  for (int w = 0; w <= workers; ++w)
    chunk[w] = static_cast<int>(static_cast<long long>(ens.size()) * w / workers);

  std::int64_t current = start_step;
  std::int64_t target = next_event(current);
  bool done = false;
  std::vector<std::exception_ptr> errors(workers);
  std::exception_ptr serial_error;

  auto on_phase = [&]() noexcept {
    for (auto& e : errors)
      if (e) {
        done = true;
        return;
      }
    try {
      current = target;
      serve_event(current);
      if (current >= end_step || stopped) done = true;
      else target = next_event(current);
    } catch (...) {
      serial_error = std::current_exception();
      done = true;
    }
  };
  std::barrier sync(workers, on_phase);

  auto work = [&](int w) {
    std::optional<TrajectoryStepper> stepper;
    std::optional<RealSpaceTransform> transform;
    try {
      stepper.emplace(model, ens, opt, dt);
      transform.emplace(ens.modes(), opt.grid);
    } catch (...) {
      errors[w] = std::current_exception();
    }
    while (true) {
      if (!errors[w]) {
        try {
          for (int mu = chunk[w]; mu < chunk[w + 1]; ++mu) {
            auto& a = ens.trajectories[mu].amplitudes;
            for (std::int64_t s = current; s < target; ++s) stepper->advance(a, mu, s);
            if (tick_due(target)) observer.observe(mu, a, *transform);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      }
      sync.arrive_and_wait();
      if (done) break;
    }
  };

  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (serial_error) std::rethrow_exception(serial_error);
  return !stopped;
}

}  // namespace dks
