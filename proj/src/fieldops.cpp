#include "dks/fieldops.hpp"

#include <cmath>

#include "dks/errors.hpp"
#include "dks/lattice.hpp"
#include "fft.hpp"

namespace dks {

namespace {

inline int wrap(int l, int n) { return ((l % n) + n) % n; }

const double inv_sqrt_2pi = 1.0 / std::sqrt(2 * constants::pi);

}  // namespace

double ModeField::norm2() const {
  double s = 0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return s;
}

bool ModeField::finite() const {
  for (const auto& a : amplitudes)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) return false;
  return true;
}

double RealSpaceField::dtheta() const { return 2 * constants::pi / grid(); }

double RealSpaceField::integral_density() const {
  double s = 0;
  for (const auto& v : values) s += std::norm(v);
  return s * dtheta();
}

ModeField fwm_naive(const ModeField& field, double g) {
  const int n = field.modes();
  const int lmax = field.max_mode();
  ModeField out(n, field.time);
  for (int l = -lmax; l <= lmax; ++l) {
    Complex acc = 0;
    for (int m = -lmax; m <= lmax; ++m) {
      for (int p = -lmax; p <= lmax; ++p) {
        const int nn = m + p - l;
        if (nn < -lmax || nn > lmax) continue;
        acc += field.at_mode(m) * std::conj(field.at_mode(nn)) * field.at_mode(p);
      }
    }
    out.at_mode(l) = g * acc;
  }
  return out;
}

int dealiased_grid(int modes) {
  int m = 1;
  while (m < 2 * modes) m *= 2;
  return m;
}

FwmKernel::FwmKernel(int modes)
    : modes_(modes),
      grid_(dealiased_grid(modes)),
      to_grid_(std::make_unique<FftPlan>(grid_, false)),
      to_modes_(std::make_unique<FftPlan>(grid_, true)) {}

FwmKernel::~FwmKernel() = default;
FwmKernel::FwmKernel(FwmKernel&&) noexcept = default;
FwmKernel& FwmKernel::operator=(FwmKernel&&) noexcept = default;

void FwmKernel::apply(std::span<const Complex> in, std::span<Complex> out, double g) {
  const int lmax = (modes_ - 1) / 2;
  auto grid = to_grid_->data();
  std::fill(grid.begin(), grid.end(), Complex{});
  for (int l = -lmax; l <= lmax; ++l) grid[wrap(l, grid_)] = in[l + lmax];
  to_grid_->execute();

  auto spec = to_modes_->data();
  for (int k = 0; k < grid_; ++k) {
    const Complex psi = grid[k];
    spec[k] = std::norm(psi) * psi;
  }
  to_modes_->execute();
  const double scale = g / grid_;
  for (int l = -lmax; l <= lmax; ++l) out[l + lmax] = scale * spec[wrap(l, grid_)];
}

ModeField fwm_spectral(const ModeField& field, double g) {
  FwmKernel kernel(field.modes());
  ModeField out(field.modes(), field.time);
  kernel.apply(field.amplitudes, out.amplitudes, g);
  return out;
}

LinearPropagator::LinearPropagator(std::span<const double> sigma, double kappa, double dt,
                                   double shift)
    : factors_(sigma.size()) {
  for (std::size_t i = 0; i < sigma.size(); ++i)
    factors_[i] = std::exp(Complex(-0.5 * kappa * dt, (sigma[i] + shift) * dt));
}

void LinearPropagator::apply(std::span<Complex> amplitudes) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) amplitudes[i] *= factors_[i];
}

ModeField linear_step(const ModeField& field, std::span<const double> sigma, double kappa,
                      double dt) {
  if (!(dt > 0)) fail(ErrorKind::domain, "linear_step needs dt > 0");
  if (static_cast<int>(sigma.size()) != field.modes())
    fail(ErrorKind::domain, "detuning profile length does not match the field");
  ModeField out = field;
  LinearPropagator(sigma, kappa, dt).apply(out.amplitudes);
  out.time += dt;
  return out;
}

RealSpaceTransform::RealSpaceTransform(int modes, int grid) : modes_(modes), grid_(grid) {
  if (grid < modes)
    fail(ErrorKind::resolution, "real-space grid (" + std::to_string(grid) +
                                    ") must have at least as many points as modes (" +
                                    std::to_string(modes) + ")");
  backward_ = std::make_unique<FftPlan>(grid, false);
  forward_ = std::make_unique<FftPlan>(grid, true);
}

RealSpaceTransform::~RealSpaceTransform() = default;
RealSpaceTransform::RealSpaceTransform(RealSpaceTransform&&) noexcept = default;
RealSpaceTransform& RealSpaceTransform::operator=(RealSpaceTransform&&) noexcept = default;

void RealSpaceTransform::to_real(std::span<const Complex> amplitudes, std::span<Complex> psi) {
  const int lmax = (modes_ - 1) / 2;
  auto buf = backward_->data();
  std::fill(buf.begin(), buf.end(), Complex{});
  for (int l = -lmax; l <= lmax; ++l) buf[wrap(l, grid_)] = amplitudes[l + lmax];
  backward_->execute();
  for (int k = 0; k < grid_; ++k) psi[k] = inv_sqrt_2pi * buf[k];
}

void RealSpaceTransform::accumulate_density(std::span<const Complex> amplitudes,
                                            std::span<double> density) {
  const int lmax = (modes_ - 1) / 2;
  auto buf = backward_->data();
  std::fill(buf.begin(), buf.end(), Complex{});
  for (int l = -lmax; l <= lmax; ++l) buf[wrap(l, grid_)] = amplitudes[l + lmax];
  backward_->execute();
  const double norm = inv_sqrt_2pi * inv_sqrt_2pi;
  for (int k = 0; k < grid_; ++k) density[k] += norm * std::norm(buf[k]);
}

void RealSpaceTransform::to_modes(std::span<const Complex> psi, std::span<Complex> amplitudes) {
  const int lmax = (modes_ - 1) / 2;
  auto buf = forward_->data();
  std::copy(psi.begin(), psi.end(), buf.begin());
  forward_->execute();
  const double scale = std::sqrt(2 * constants::pi) / grid_;
  for (int l = -lmax; l <= lmax; ++l) amplitudes[l + lmax] = scale * buf[wrap(l, grid_)];
}

RealSpaceField to_real_space(const ModeField& field, int grid) {
  RealSpaceTransform t(field.modes(), grid);
  RealSpaceField out;
  out.values.resize(grid);
  t.to_real(field.amplitudes, out.values);
  return out;
}

ModeField project_to_modes(const RealSpaceField& psi, int modes) {
  RealSpaceTransform t(modes, psi.grid());
  ModeField out(modes);
  t.to_modes(psi.values, out.amplitudes);
  return out;
}

}  // namespace dks
