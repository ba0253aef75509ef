#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dks/observables.hpp"

namespace dks {

struct FitWindow {
  /// Ticks before this tau are treated as the initial transient, unless C - 1 has
  /// already dropped below 80% of its initial value earlier.
  double transient_skip_tau = 10;
  std::optional<double> tau_start;  // explicit window overrides the rules above
  std::optional<double> tau_end;
  int min_points = 20;
  /// Runs-test z-score below which the residuals are flagged as structured.
  double runs_z_threshold = -3;
};

/// C(tau) - 1 = A exp(-Lambda tau), tau = kappa t / 2.
struct GapFit {
  double lambda = 0;
  double amplitude = 0;
  double lambda_se = 0;
  double amplitude_se = 0;
  double lambda_ci = 0;  // 95% half-widths
  double amplitude_ci = 0;
  double tau_a = 0;
  double tau_b = 0;
  int points = 0;
  double residual_norm = 0;  // weighted
  double reduced_chi2 = 0;
  double autocorrelation_time = 1;  // of the standardized residuals, in ticks
  std::optional<std::string> warning;
};

GapFit fit_gap(std::span<const double> tau, std::span<const double> c,
               std::span<const double> c_se, const FitWindow& window = {});
GapFit fit_gap(const TimeSeriesRecord& record, const FitWindow& window = {});

struct PowerLaw {
  double a = 0;
  double b = 0;
  double a_se = 0;
  double a_ci = 0;
  double log_b_se = 0;
  double b_low = 0;  // 95% interval for b
  double b_high = 0;
  int points = 0;
  double reduced_chi2 = 0;
};

/// y = b x^a by weighted regression of log y on log x. y_se may be empty (unweighted).
PowerLaw power_law_fit(std::span<const double> x, std::span<const double> y,
                       std::span<const double> y_se = {});

struct SpectrumResult {
  std::vector<double> omega;  // kappa units, ascending, relative to the pump
  std::vector<double> power;
  double t0 = 0;
  double periods = 0;
  double period = 0;
  double dt = 0;
  double n_tilde = 1;
  double resolution() const noexcept { return omega.size() > 1 ? omega[1] - omega[0] : 0; }
};

/// S(omega) = |sqrt(2 pi)/(N_T T) * integral_{t0}^{t0+N_T T} e^{i omega t} phi(t) N dt|^2,
/// evaluated as a rectangular-window DFT of uniformly sampled phi.
SpectrumResult power_spectrum(const MeanFieldSeries& series, double n_tilde, double t0,
                              double periods, double period);

struct CombSpacing {
  double spacing = 0;
  double standard_error = 0;
  std::vector<double> peaks;  // refined positions, kappa units
};

/// Peaks must exceed prominence x median power and relative_floor x the strongest line.
CombSpacing comb_spacing(const SpectrumResult& spectrum, double prominence = 10,
                         int min_separation_bins = 5, double relative_floor = 1e-12);

}  // namespace dks
