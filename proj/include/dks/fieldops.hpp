#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace dks {

using Complex = std::complex<double>;

/// Mode amplitudes alpha_l for l = -(N_m-1)/2 ... (N_m-1)/2, stored at index l + (N_m-1)/2.
struct ModeField {
  std::vector<Complex> amplitudes;
  double time = 0;

  ModeField() = default;
  explicit ModeField(int modes, double t = 0) : amplitudes(modes), time(t) {}

  int modes() const noexcept { return static_cast<int>(amplitudes.size()); }
  int max_mode() const noexcept { return (modes() - 1) / 2; }
  Complex& at_mode(int l) { return amplitudes[l + max_mode()]; }
  const Complex& at_mode(int l) const { return amplitudes[l + max_mode()]; }
  double norm2() const;  // sum_l |alpha_l|^2
  bool finite() const;

  bool operator==(const ModeField&) const = default;
};

/// psi(theta_k) on theta_k = 2 pi k / N_grid, including the 1/sqrt(2 pi) prefactor.
struct RealSpaceField {
  std::vector<Complex> values;

  int grid() const noexcept { return static_cast<int>(values.size()); }
  double dtheta() const;
  /// Periodic trapezoid rule for the integral of |psi|^2.
  double integral_density() const;
};

class FftPlan;

/// g * sum_{m+p-n=l} alpha_m conj(alpha_n) alpha_p by direct enumeration; O(N_m^3).
ModeField fwm_naive(const ModeField& field, double g);

/// The same sum evaluated as the mode projection of g |psi|^2 psi on a zero-padded grid.
/// Owns FFT plans and scratch buffers: one instance per thread.
class FwmKernel {
 public:
  explicit FwmKernel(int modes);
  ~FwmKernel();
  FwmKernel(FwmKernel&&) noexcept;
  FwmKernel& operator=(FwmKernel&&) noexcept;

  int modes() const noexcept { return modes_; }
  int padded_grid() const noexcept { return grid_; }

  /// out_l = g * FWM(in)_l. in and out may alias.
  void apply(std::span<const Complex> in, std::span<Complex> out, double g);

 private:
  int modes_;
  int grid_;
  std::unique_ptr<FftPlan> to_grid_;
  std::unique_ptr<FftPlan> to_modes_;
};

ModeField fwm_spectral(const ModeField& field, double g);

/// Smallest power of two >= 2 N_m (dealiased grid for the cubic term).
int dealiased_grid(int modes);

/// Exact propagator of d alpha_l/dt = (i sigma_l - kappa/2 + i shift) alpha_l over dt.
class LinearPropagator {
 public:
  LinearPropagator(std::span<const double> sigma, double kappa, double dt, double shift = 0);
  void apply(std::span<Complex> amplitudes) const;
  std::span<const Complex> factors() const { return factors_; }

 private:
  std::vector<Complex> factors_;
};

ModeField linear_step(const ModeField& field, std::span<const double> sigma, double kappa, double dt);

/// Mode space <-> uniform angular grid. One instance per thread.
class RealSpaceTransform {
 public:
  RealSpaceTransform(int modes, int grid);
  ~RealSpaceTransform();
  RealSpaceTransform(RealSpaceTransform&&) noexcept;
  RealSpaceTransform& operator=(RealSpaceTransform&&) noexcept;

  int modes() const noexcept { return modes_; }
  int grid() const noexcept { return grid_; }

  void to_real(std::span<const Complex> amplitudes, std::span<Complex> psi);
  /// Adds |psi(theta_k)|^2 into density (accumulating form used by ensemble reductions).
  void accumulate_density(std::span<const Complex> amplitudes, std::span<double> density);
  void to_modes(std::span<const Complex> psi, std::span<Complex> amplitudes);

 private:
  int modes_;
  int grid_;
  std::unique_ptr<FftPlan> backward_;
  std::unique_ptr<FftPlan> forward_;
};

RealSpaceField to_real_space(const ModeField& field, int grid);
/// Inverse of to_real_space for band-limited fields (modes outside the lattice dropped).
ModeField project_to_modes(const RealSpaceField& psi, int modes);

}  // namespace dks
