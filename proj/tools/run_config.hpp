#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dks/gp.hpp"
#include "dks/lattice.hpp"
#include "dks/report.hpp"
#include "dks/twa.hpp"

namespace dks::cli {

inline constexpr const char* output_root_env = "DKS_OUTPUT_ROOT";

struct SpectrumRequest {
  double t0 = 20;
  double periods = 2000;
  int samples_per_period = 24;
};

struct GpSection {
  double dt = default_dt;
  double t_relax = 50;
  double cadence = 0.25;
  double window = 5;
  double tolerance = 1e-8;
  double seed_width = 0;
  bool allow_below_threshold = false;
  std::optional<SpectrumRequest> spectrum;
};

struct TwaSection {
  std::optional<double> n_tilde;
  int n_traj = 1000;
  double dt = default_dt;
  double cadence = 1;
  double t_end = 200;
  double checkpoint_every = 0;
  bool keep_density = false;
  int grid = default_grid;
  double field_cadence = 0;
  double field_start = 0;
  bool noise = true;
  std::optional<std::filesystem::path> soliton_file;
  /// Stops a fresh run after this many checkpoints (0 = never); emulates an interrupted
  /// job. Ignored on resume and excluded from the config hash.
  int halt_after_checkpoints = 0;
};

struct SweepSection {
  std::vector<double> n_tilde;
  double tau_star = 60;
  double tau_star_half_width = 5;
};

struct RunConfig {
  ModelParams model;
  std::vector<std::string> model_warnings;
  bool from_physical = false;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path output_dir;
  GpSection gp;
  TwaSection twa;
  std::optional<SweepSection> sweep;
  AnalysisOptions analysis;
  std::vector<std::filesystem::path> records;
  /// Hash of the canonical config (excluding workers, output location and halting).
  std::uint64_t hash = 0;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

/// Parses and validates a config document; relative paths resolve against `base_dir`
/// (records, soliton file) and the output root (output_dir).
RunConfig parse_config(const nlohmann::json& doc, const Overrides& overrides,
                       const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides);

std::filesystem::path output_root();

int run_gp(const RunConfig& config);
int run_twa(const RunConfig& config, const std::optional<std::filesystem::path>& resume);
int run_sweep(const RunConfig& config);
int run_analyze(const RunConfig& config);

}  // namespace dks::cli
