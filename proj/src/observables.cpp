#include "dks/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dks/errors.hpp"

namespace dks {

namespace {

const double inv_sqrt_2pi = 1.0 / std::sqrt(2 * constants::pi);

double contrast_or_nan(std::span<const double> density) {
  double sum = 0, peak = -std::numeric_limits<double>::infinity();
  for (double v : density) {
    sum += v;
    peak = std::max(peak, v);
  }
  const double mean = sum / static_cast<double>(density.size());
  return mean > 0 ? peak / mean : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void Ensemble::validate() const {
  if (trajectories.size() < 2) fail(ErrorKind::domain, "an ensemble needs at least 2 trajectories");
  const int m = trajectories.front().modes();
  for (const auto& f : trajectories)
    if (f.modes() != m) fail(ErrorKind::domain, "ensemble trajectories differ in mode count");
}

void TimeSeriesRecord::push(Tick tick) {
  if (!ticks_.empty()) {
    const Tick& last = ticks_.back();
    if (!(tick.t > last.t)) fail(ErrorKind::io, "record ticks must be strictly increasing in time");
    if (tick.occupation.size() != last.occupation.size() ||
        tick.mean_modes.size() != last.mean_modes.size() ||
        tick.density.size() != last.density.size())
      fail(ErrorKind::io, "record tick vector lengths changed");
  }
  ticks_.push_back(std::move(tick));
}

void TimeSeriesRecord::push_field(FieldSample sample) {
  if (!field_samples_.empty() && !(sample.t > field_samples_.back().t))
    fail(ErrorKind::io, "field samples must be strictly increasing in time");
  field_samples_.push_back(std::move(sample));
}

std::vector<double> TimeSeriesRecord::times() const {
  std::vector<double> v;
  for (const auto& k : ticks_) v.push_back(k.t);
  return v;
}

std::vector<double> TimeSeriesRecord::taus() const {
  std::vector<double> v;
  for (const auto& k : ticks_) v.push_back(tau_of(k.t));
  return v;
}

std::vector<double> TimeSeriesRecord::contrasts() const {
  std::vector<double> v;
  for (const auto& k : ticks_) v.push_back(k.contrast);
  return v;
}

std::vector<double> TimeSeriesRecord::contrast_errors() const {
  std::vector<double> v;
  for (const auto& k : ticks_) v.push_back(k.contrast_se);
  return v;
}

std::vector<double> TimeSeriesRecord::totals() const {
  std::vector<double> v;
  for (const auto& k : ticks_) v.push_back(k.n_total);
  return v;
}

double DensityEstimate::integral() const {
  double s = 0;
  for (double v : value) s += v;
  return s * dtheta;
}

EnsembleObserver::EnsembleObserver(int modes, int n_traj, double n_tilde, Options options)
    : modes_(modes),
      n_traj_(n_traj),
      n_tilde_(n_tilde),
      options_(options),
      mode_power_(static_cast<std::size_t>(n_traj) * modes),
      amplitudes_(static_cast<std::size_t>(n_traj) * modes),
      density_(static_cast<std::size_t>(n_traj) * options.grid) {
  if (options.grid < modes)
    fail(ErrorKind::resolution, "real-space grid must have at least as many points as modes");
}

void EnsembleObserver::observe(int trajectory, std::span<const Complex> amplitudes,
                               RealSpaceTransform& transform) {
  const std::size_t base = static_cast<std::size_t>(trajectory) * modes_;
  for (int i = 0; i < modes_; ++i) {
    mode_power_[base + i] = std::norm(amplitudes[i]);
    amplitudes_[base + i] = amplitudes[i];
  }
  std::span<double> slot(density_.data() + static_cast<std::size_t>(trajectory) * options_.grid,
                         options_.grid);
  std::fill(slot.begin(), slot.end(), 0.0);
  transform.accumulate_density(amplitudes, slot);
}

Tick EnsembleObserver::reduce(double t) const {
  const int n = n_traj_;
  const int grid = options_.grid;
  const double scale = n_tilde_;
  const double vac_mode = options_.vacuum_subtract ? 0.5 : 0.0;
  const double vac_theta = options_.vacuum_subtract ? modes_ / (4 * constants::pi) : 0.0;
  auto se_of = [n](double sum_sq_dev) {
    return n > 1 ? std::sqrt(sum_sq_dev / (n - 1) / n) : 0.0;
  };

  Tick tick;
  tick.t = t;
  tick.occupation.resize(modes_);
  tick.occupation_se.resize(modes_);
  tick.mean_modes.resize(modes_);
  for (int i = 0; i < modes_; ++i) {
    double s = 0;
    Complex a = 0;
    for (int mu = 0; mu < n; ++mu) {
      s += mode_power_[static_cast<std::size_t>(mu) * modes_ + i];
      a += amplitudes_[static_cast<std::size_t>(mu) * modes_ + i];
    }
    const double mean = s / n;
    double dev = 0;
    for (int mu = 0; mu < n; ++mu) {
      const double d = mode_power_[static_cast<std::size_t>(mu) * modes_ + i] - mean;
      dev += d * d;
    }
    tick.occupation[i] = scale * mean - vac_mode;
    tick.occupation_se[i] = scale * se_of(dev);
    tick.mean_modes[i] = a / double(n);
  }

  std::vector<double> totals(n), psi0_re(n), psi0_im(n);
  double tot_sum = 0;
  Complex psi0_sum = 0;
  for (int mu = 0; mu < n; ++mu) {
    double s = 0;
    Complex p = 0;
    for (int i = 0; i < modes_; ++i) {
      s += mode_power_[static_cast<std::size_t>(mu) * modes_ + i];
      p += amplitudes_[static_cast<std::size_t>(mu) * modes_ + i];
    }
    totals[mu] = s;
    psi0_re[mu] = p.real() * inv_sqrt_2pi;
    psi0_im[mu] = p.imag() * inv_sqrt_2pi;
    tot_sum += s;
    psi0_sum += Complex(psi0_re[mu], psi0_im[mu]);
  }
  const double tot_mean = tot_sum / n;
  const Complex psi0_mean = psi0_sum / double(n);
  double tot_dev = 0, psi_dev = 0;
  for (int mu = 0; mu < n; ++mu) {
    tot_dev += (totals[mu] - tot_mean) * (totals[mu] - tot_mean);
    psi_dev += std::norm(Complex(psi0_re[mu], psi0_im[mu]) - psi0_mean);
  }
  tick.n_total = scale * tot_mean - vac_mode * modes_;
  tick.n_total_se = scale * se_of(tot_dev);
  tick.mean_field0 = psi0_mean;
  tick.mean_field0_se = se_of(psi_dev);

  // Density: overall mean and jackknife over contiguous trajectory blocks.
  const int blocks = std::max(1, std::min(options_.jackknife_blocks, n));
  std::vector<double> block_sum(static_cast<std::size_t>(blocks) * grid, 0.0);
  std::vector<int> block_count(blocks, 0);
  for (int mu = 0; mu < n; ++mu) {
    const int b = static_cast<int>(static_cast<long long>(mu) * blocks / n);
    ++block_count[b];
    const double* src = density_.data() + static_cast<std::size_t>(mu) * grid;
    double* dst = block_sum.data() + static_cast<std::size_t>(b) * grid;
    for (int k = 0; k < grid; ++k) dst[k] += src[k];
  }
  std::vector<double> total(grid, 0.0);
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < grid; ++k) total[k] += block_sum[static_cast<std::size_t>(b) * grid + k];

  std::vector<double> density(grid);
  for (int k = 0; k < grid; ++k) density[k] = scale * total[k] / n - vac_theta;
  tick.contrast = contrast_or_nan(density);

  if (blocks > 1) {
    std::vector<double> loo(grid), c_loo(blocks);
    double c_mean = 0;
    for (int b = 0; b < blocks; ++b) {
      const int m = n - block_count[b];
      for (int k = 0; k < grid; ++k)
        loo[k] = scale * (total[k] - block_sum[static_cast<std::size_t>(b) * grid + k]) / m - vac_theta;
      c_loo[b] = contrast_or_nan(loo);
      c_mean += c_loo[b];
    }
    c_mean /= blocks;
    double dev = 0;
    for (double c : c_loo) dev += (c - c_mean) * (c - c_mean);
    tick.contrast_se = std::sqrt(double(blocks - 1) / blocks * dev);
  }
  if (options_.keep_density) tick.density = std::move(density);
  return tick;
}

std::vector<Complex> EnsembleObserver::mean_modes(const Ensemble& ens) {
  std::vector<Complex> m(ens.modes());
  for (const auto& f : ens.trajectories)
    for (int i = 0; i < ens.modes(); ++i) m[i] += f.amplitudes[i];
  for (auto& v : m) v /= double(ens.size());
  return m;
}

Tick observe_ensemble(const Ensemble& ens, EnsembleObserver::Options options) {
  EnsembleObserver obs(ens.modes(), ens.size(), ens.n_tilde, options);
  RealSpaceTransform transform(ens.modes(), options.grid);
  for (int mu = 0; mu < ens.size(); ++mu) obs.observe(mu, ens.trajectories[mu].amplitudes, transform);
  return obs.reduce(ens.time);
}

Tick observe_field(const ModeField& field, int grid, bool keep_density) {
  EnsembleObserver::Options opt;
  opt.grid = grid;
  opt.vacuum_subtract = false;
  opt.keep_density = keep_density;
  EnsembleObserver obs(field.modes(), 1, 1.0, opt);
  RealSpaceTransform transform(field.modes(), grid);
  obs.observe(0, field.amplitudes, transform);
  return obs.reduce(field.time);
}

OccupationEstimate mode_occupation(const Ensemble& ens, bool vacuum_subtract) {
  ens.validate();
  EnsembleObserver::Options opt;
  opt.vacuum_subtract = vacuum_subtract;
  opt.grid = std::max(default_grid, ens.modes());
  Tick t = observe_ensemble(ens, opt);
  return {std::move(t.occupation), std::move(t.occupation_se)};
}

PhotonTotals total_photons_and_power(const Ensemble& ens, const ModelParams& model,
                                     bool vacuum_subtract) {
  ens.validate();
  EnsembleObserver::Options opt;
  opt.vacuum_subtract = vacuum_subtract;
  opt.grid = std::max(default_grid, ens.modes());
  Tick t = observe_ensemble(ens, opt);
  return {t.n_total, t.n_total_se, intracavity_power(model, t.n_total)};
}

DensityEstimate photon_density(const Ensemble& ens, int grid, bool vacuum_subtract) {
  ens.validate();
  if (grid < ens.modes())
    fail(ErrorKind::resolution, "photon_density needs a grid with at least N_m points");
  const int n = ens.size();
  const double vac = vacuum_subtract ? ens.modes() / (4 * constants::pi) : 0.0;
  RealSpaceTransform transform(ens.modes(), grid);
  std::vector<double> sum(grid, 0.0), sum_sq(grid, 0.0), one(grid);
  for (const auto& f : ens.trajectories) {
    std::fill(one.begin(), one.end(), 0.0);
    transform.accumulate_density(f.amplitudes, one);
    for (int k = 0; k < grid; ++k) {
      sum[k] += one[k];
      sum_sq[k] += one[k] * one[k];
    }
  }
  DensityEstimate out;
  out.dtheta = 2 * constants::pi / grid;
  out.value.resize(grid);
  out.standard_error.resize(grid);
  for (int k = 0; k < grid; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(0.0, (sum_sq[k] - n * mean * mean) / (n - 1));
    out.value[k] = ens.n_tilde * mean - vac;
    out.standard_error[k] = ens.n_tilde * std::sqrt(var / n);
  }
  return out;
}

double contrast(std::span<const double> density) {
  if (density.empty()) fail(ErrorKind::domain, "contrast of an empty density");
  const double c = contrast_or_nan(density);
  if (std::isnan(c)) fail(ErrorKind::domain, "degenerate density: non-positive mean");
  return c;
}

std::optional<double> intracavity_power(const ModelParams& model, double n_total) {
  if (!model.kappa_per_s || !model.omega_p_rad_per_s) return std::nullopt;
  const double d1_si = model.d1 * *model.kappa_per_s;
  return constants::hbar * *model.omega_p_rad_per_s * d1_si * n_total / (2 * constants::pi);
}

MeanFieldSeries mean_field_series(const TimeSeriesRecord& record, double theta) {
  std::vector<double> t;
  std::vector<const std::vector<Complex>*> modes;
  if (!record.field_samples().empty()) {
    for (const auto& s : record.field_samples()) {
      t.push_back(s.t);
      modes.push_back(&s.mean_modes);
    }
  } else {
    for (const auto& k : record.ticks()) {
      t.push_back(k.t);
      modes.push_back(&k.mean_modes);
    }
  }
  if (t.size() < 2) fail(ErrorKind::domain, "mean-field series needs at least two samples");
  const int lmax = (record.meta.modes - 1) / 2;
  const double cadence = t[1] - t[0];
  if (record.meta.d1 != 0 && lmax > 0 && cadence * std::abs(record.meta.d1) * lmax >= constants::pi)
    fail(ErrorKind::resolution,
         "sampling cadence " + std::to_string(cadence) + " aliases comb lines up to l = " +
             std::to_string(lmax) + " (needs cadence < pi/(D1 l_max))");

  MeanFieldSeries out;
  out.t = t;
  out.value.resize(t.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    Complex acc = 0;
    const auto& m = *modes[s];
    for (int i = 0; i < record.meta.modes; ++i) {
      const int l = i - lmax;
      double phase = l * theta;
      if (record.meta.co_rotating) phase -= record.meta.d1 * l * t[s];
      acc += m[i] * std::polar(1.0, phase);
    }
    out.value[s] = inv_sqrt_2pi * acc;
  }
  return out;
}

Complex mean_field(const Ensemble& ens, double theta, double d1, bool co_rotating) {
  const auto m = EnsembleObserver::mean_modes(ens);
  const int lmax = (ens.modes() - 1) / 2;
  Complex acc = 0;
  for (int i = 0; i < ens.modes(); ++i) {
    const int l = i - lmax;
    double phase = l * theta;
    if (co_rotating) phase -= d1 * l * ens.time;
    acc += m[i] * std::polar(1.0, phase);
  }
  return inv_sqrt_2pi * acc;
}

}  // namespace dks
