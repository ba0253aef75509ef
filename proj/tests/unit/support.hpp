#pragma once

#include <cmath>
#include <random>

#include "dks/fieldops.hpp"

namespace dks::test {

inline ModeField random_field(int modes, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ModeField f(modes);
  for (auto& a : f.amplitudes) a = {n(rng), n(rng)};
  return f;
}

inline double rel_diff(const ModeField& a, const ModeField& b) {
  double num = 0, den = 0;
  for (int i = 0; i < a.modes(); ++i) {
    num += std::norm(a.amplitudes[i] - b.amplitudes[i]);
    den += std::norm(b.amplitudes[i]);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace dks::test
