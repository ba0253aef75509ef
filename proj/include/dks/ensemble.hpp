#pragma once

#include <cstdint>
#include <vector>

#include "dks/fieldops.hpp"

namespace dks {

/// N_traj rescaled Langevin trajectories sharing one time stamp.
struct Ensemble {
  std::vector<ModeField> trajectories;
  double n_tilde = 1.0;
  std::uint64_t model_hash = 0;
  std::uint64_t master_seed = 0;
  std::int64_t step = 0;  // completed integration steps; also the noise counter
  double time = 0;

  int size() const noexcept { return static_cast<int>(trajectories.size()); }
  int modes() const noexcept { return trajectories.empty() ? 0 : trajectories.front().modes(); }
  void validate() const;
};

}  // namespace dks
