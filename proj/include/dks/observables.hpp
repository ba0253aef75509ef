#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dks/ensemble.hpp"
#include "dks/fieldops.hpp"
#include "dks/lattice.hpp"

namespace dks {

inline constexpr int default_grid = 256;
inline constexpr const char* code_version = "0.3.1";

/// One sampling instant. Times are kept in 1/kappa; tau = kappa t / 2 only at export.
struct Tick {
  double t = 0;
  std::vector<double> occupation;     // N_l
  std::vector<double> occupation_se;
  double n_total = 0;
  double n_total_se = 0;
  double contrast = 0;
  double contrast_se = 0;
  Complex mean_field0;                // <psi~(theta=0)> in the integration frame
  double mean_field0_se = 0;
  std::vector<Complex> mean_modes;    // <alpha~_l>
  std::vector<double> density;        // n(theta); empty unless requested

  bool operator==(const Tick&) const = default;
};

/// Dense mean-mode samples for spectra.
struct FieldSample {
  double t = 0;
  std::vector<Complex> mean_modes;

  bool operator==(const FieldSample&) const = default;
};

struct RecordMeta {
  std::string kind = "twa";  // "gp" or "twa"
  int modes = 0;
  int grid = default_grid;
  double n_tilde = 1.0;
  bool co_rotating = true;
  double d1 = 0;
  double dt = 0;
  std::uint64_t model_hash = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::int64_t n_traj = 1;
  bool vacuum_subtracted = true;
  std::string version = code_version;

  bool operator==(const RecordMeta&) const = default;
};

class TimeSeriesRecord {
 public:
  RecordMeta meta;

  /// Appends a tick; times must increase strictly and vector lengths stay fixed.
  void push(Tick tick);
  void push_field(FieldSample sample);

  const std::vector<Tick>& ticks() const noexcept { return ticks_; }
  const std::vector<FieldSample>& field_samples() const noexcept { return field_samples_; }
  std::size_t size() const noexcept { return ticks_.size(); }
  bool empty() const noexcept { return ticks_.empty(); }

  static double tau_of(double t) noexcept { return 0.5 * t; }

  std::vector<double> times() const;
  std::vector<double> taus() const;
  std::vector<double> contrasts() const;
  std::vector<double> contrast_errors() const;
  std::vector<double> totals() const;

  bool operator==(const TimeSeriesRecord&) const = default;

 private:
  std::vector<Tick> ticks_;
  std::vector<FieldSample> field_samples_;
};

struct OccupationEstimate {
  std::vector<double> value;
  std::vector<double> standard_error;
};

struct PhotonTotals {
  double n_total = 0;
  double standard_error = 0;
  std::optional<double> intracavity_power_w;
};

struct DensityEstimate {
  std::vector<double> value;  // photons per radian, integrates to N_tot
  std::vector<double> standard_error;
  double dtheta = 0;
  double integral() const;
};

/// Collects per-trajectory contributions into private slots and reduces them in
/// trajectory order, so the reduced numbers do not depend on who filled which slot.
class EnsembleObserver {
 public:
  struct Options {
    int grid = default_grid;
    bool vacuum_subtract = true;
    bool keep_density = false;
    int jackknife_blocks = 20;
  };

  EnsembleObserver(int modes, int n_traj, double n_tilde, Options options);

  /// Thread-safe for distinct trajectory indices.
  void observe(int trajectory, std::span<const Complex> amplitudes, RealSpaceTransform& transform);
  Tick reduce(double t) const;
  /// Ensemble mean of the mode amplitudes only (cheap path for dense spectra).
  static std::vector<Complex> mean_modes(const Ensemble& ens);

  int grid() const noexcept { return options_.grid; }

 private:
  int modes_;
  int n_traj_;
  double n_tilde_;
  Options options_;
  std::vector<double> mode_power_;   // n_traj x modes
  std::vector<Complex> amplitudes_;  // n_traj x modes
  std::vector<double> density_;      // n_traj x grid
};

Tick observe_ensemble(const Ensemble& ens, EnsembleObserver::Options options);
/// Deterministic single field: N_l = |alpha_l|^2, no vacuum subtraction.
Tick observe_field(const ModeField& field, int grid, bool keep_density = false);

OccupationEstimate mode_occupation(const Ensemble& ens, bool vacuum_subtract = true);
PhotonTotals total_photons_and_power(const Ensemble& ens, const ModelParams& model,
                                     bool vacuum_subtract = true);
DensityEstimate photon_density(const Ensemble& ens, int grid = default_grid,
                               bool vacuum_subtract = true);

/// max_theta n / (mean of n over the ring).
double contrast(std::span<const double> density);

/// P_I = hbar omega_p D1 N_tot / (2 pi); needs the SI anchors.
std::optional<double> intracavity_power(const ModelParams& model, double n_total);

struct MeanFieldSeries {
  std::vector<double> t;
  std::vector<Complex> value;  // lab-frame <psi~(theta, t)>
};

/// Lab-frame mean field at angle theta from the dense field samples (falls back to
/// tick means when the record has none). Refuses aliased sampling.
MeanFieldSeries mean_field_series(const TimeSeriesRecord& record, double theta);
/// Single-time lab-frame mean field of an ensemble.
Complex mean_field(const Ensemble& ens, double theta, double d1, bool co_rotating);

}  // namespace dks
