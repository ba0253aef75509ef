#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dks/fieldops.hpp"
#include "dks/lattice.hpp"
#include "dks/observables.hpp"

namespace dks {

enum class Scheme {
  split_step,  // exact linear half steps around an explicit midpoint nonlinear+drive step
  euler,       // literal explicit Euler update of the full equation
};

inline constexpr double default_dt = 5e-4;

/// Deterministic right-hand side pieces shared with the TWA engine.
/// `linear_shift` adds a constant real frequency to every sigma_l (the Wigner -g/N term).
class GpStepper {
 public:
  GpStepper(const ModelParams& model, double dt, Scheme scheme = Scheme::split_step,
            double linear_shift = 0);

  /// Advances amplitudes in place by one dt.
  void step(std::span<Complex> amplitudes);
  double dt() const noexcept { return dt_; }
  int modes() const noexcept { return modes_; }

 private:
  void nonlinear_rhs(std::span<const Complex> a, std::span<Complex> out);

  int modes_;
  double dt_;
  Scheme scheme_;
  double g_;
  Complex drive_term_;  // -i kappa F / 2 on l = 0
  int center_;
  std::vector<double> sigma_;
  double kappa_;
  double shift_;
  LinearPropagator half_;
  FwmKernel kernel_;
  std::vector<Complex> k1_, mid_;
};

/// One step; throws DivergenceError on a non-finite result.
ModeField gp_step(const ModeField& field, const ModelParams& model, double dt,
                  Scheme scheme = Scheme::split_step);

struct GpOptions {
  double dt = default_dt;
  Scheme scheme = Scheme::split_step;
  int grid = default_grid;
  int max_halvings = 6;
  bool keep_density = false;
  /// Dense mean-mode samples for spectra; 0 disables them.
  double field_cadence = 0;
  double field_start = 0;
};

struct GpRun {
  ModeField field;
  TimeSeriesRecord record;
  double dt_used = 0;
};

/// Integrates from field.time to t_end, ticking every cadence.
GpRun evolve_gp(const ModeField& field, const ModelParams& model, double t_end, double cadence,
                const GpOptions& options = {});

/// True iff every N_l moved by less than tol (relative) across the trailing window.
bool check_stationarity(const TimeSeriesRecord& record, double window, double tol = 1e-8);

/// Lowest homogeneous steady state alpha_0 of the driven Kerr mode.
Complex homogeneous_state(const ModelParams& model);

struct SeedSpec {
  enum class Kind { sech, stored };
  Kind kind = Kind::sech;
  /// sech width in rad; 0 selects sqrt(D2 / zeta).
  double width = 0;
  std::optional<ModeField> stored;
};

struct SolitonOptions {
  GpOptions gp;
  double t_relax = 50;
  double window = 5;
  double tol = 1e-8;
  int max_extensions = 4;
  int max_narrowing = 3;
};

/// Sech soliton on the homogeneous background, before relaxation.
ModeField sech_seed(const ModelParams& model, double width);

/// Number of separated density peaks above half of (max - mean).
int count_density_peaks(std::span<const double> density);

/// Relaxes a seed to the stationary single-soliton state; the relaxation record of the
/// accepted attempt is stored in `convergence` when given.
ModeField prepare_soliton(const ModelParams& model, const SeedSpec& seed,
                          const SolitonOptions& options = {},
                          TimeSeriesRecord* convergence = nullptr);

}  // namespace dks
