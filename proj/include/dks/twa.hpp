#pragma once

#include <cstdint>
#include <functional>

#include "dks/ensemble.hpp"
#include "dks/gp.hpp"
#include "dks/lattice.hpp"
#include "dks/observables.hpp"
#include "dks/rng.hpp"

namespace dks {

/// alpha~_{l,mu}(0) = alpha~_l^GP + eta_{l,mu} / sqrt(2 N~).
Ensemble sample_initial(const ModeField& gp_field, double n_tilde, int n_traj,
                        const NoisePolicy& policy, std::uint64_t model_hash = 0);

struct TwaOptions {
  double dt = default_dt;
  int workers = 1;
  int grid = default_grid;
  bool vacuum_subtract = true;
  bool keep_density = false;
  /// Diagnostics: switch off the Langevin noise and/or the -g/N drift shift.
  bool noise = true;
  bool wigner_shift = true;
  double field_cadence = 0;
  double field_start = 0;
  /// Checkpoint period in 1/kappa; 0 disables. Returning false from the callback
  /// stops the run after the checkpoint (used to emulate an interrupted job).
  double checkpoint_every = 0;
  std::function<bool(const Ensemble&, const TimeSeriesRecord&)> on_checkpoint;
  std::size_t max_ticks = 10'000'000;
};

/// One step of every trajectory. Ensemble time is step * dt.
void twa_step(Ensemble& ens, const ModelParams& model, double dt, const TwaOptions& options = {});

/// Advances to t_end and appends ticks to `recorder`. Returns false if a checkpoint
/// callback stopped the run early. Results do not depend on options.workers.
bool evolve_twa(Ensemble& ens, const ModelParams& model, double t_end, double cadence,
                TimeSeriesRecord& recorder, const TwaOptions& options = {});

}  // namespace dks
