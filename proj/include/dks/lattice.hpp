#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dks {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;    // J s
inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/// Ring resonator and pump, in SI units.
struct PhysicalParams {
  double radius_m = 0;
  double a_eff_m2 = 0;
  double quality_factor = 0;
  double f0_hz = 0;
  double n0 = 0;
  double n2_m2_per_w = 0;
  double beta2_s2_per_m = 0;  // < 0 is anomalous dispersion
  // Exactly one of the two pump specifications.
  std::optional<double> sigma0_rad_per_s;
  std::optional<double> omega_p_rad_per_s;
  double p_ext_w = 0;
  double eta = 0.5;
  int modes = 101;
  double n_tilde = 1.0;
  bool co_rotating = true;

  void validate() const;
};

/// Dimensionless model. Every rate is in units of kappa; kappa_per_s and
/// omega_p_rad_per_s are the SI anchors used only at the I/O boundary.
struct ModelParams {
  double kappa = 1.0;
  double g = 0;
  double sigma0 = 0;
  double d1 = 0;
  double d2 = 0;
  double drive = 0;  // F
  int modes = 1;     // N_m, odd
  double n_tilde = 1.0;
  bool co_rotating = true;

  std::optional<double> kappa_per_s;
  std::optional<double> omega_p_rad_per_s;

  int max_mode() const noexcept { return (modes - 1) / 2; }
  /// Storage index of angular mode l.
  int index_of(int l) const noexcept { return l + max_mode(); }
  int mode_at(int index) const noexcept { return index - max_mode(); }

  void validate() const;
  /// Extra preconditions for runs that must host a bright soliton.
  void require_anomalous_dispersion() const;
};

/// Result of the conversion together with the normal-dispersion flag.
struct DerivedModel {
  ModelParams model;
  bool normal_dispersion = false;
  std::vector<std::string> warnings;
};

DerivedModel derive_model_params(const PhysicalParams& phys);

/// Inverse of the drive conversion: P_ext = hbar omega_p kappa F^2 / (4 eta).
double external_power_w(double omega_p_rad_per_s, double kappa_per_s, double drive, double eta);

/// sigma_l = sigma0 - D1 l - (D2/2) l^2, with the D1 term dropped in the co-rotating frame.
std::vector<double> detuning_profile(const ModelParams& model);

/// D_int(l) = (D2/2) l^2.
double integrated_dispersion(const ModelParams& model, int l);

struct Threshold {
  double drive_threshold = 0;
  bool above = false;
};

/// F_thr = sqrt(kappa / (2 g)); above iff F > F_thr strictly.
Threshold soliton_threshold(const ModelParams& model);

/// g <- g N, F <- F / sqrt(N); the product F^2 g is preserved.
ModelParams rescale(const ModelParams& model, double n_tilde);

/// FNV-1a over the parameters that define the deterministic equation
/// (everything except n_tilde and the SI anchors).
std::uint64_t model_hash(const ModelParams& model);

/// Parameter blocks with explicit unit suffixes, e.g. "g_over_kappa" or "g_per_s".
ModelParams model_from_json(const nlohmann::json& block);
PhysicalParams physical_from_json(const nlohmann::json& block);
nlohmann::json model_to_json(const ModelParams& model);

/// Canonical full-scale model (101 modes, kappa units).
ModelParams baseline_model(int modes = 101);

}  // namespace dks
