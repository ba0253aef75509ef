#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace dks {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Noise streams addressed by (trajectory, step, mode); no mutable generator state.
/// Each draw is a complex standard normal: <xi> = 0, <xi xi> = 0, <|xi|^2> = 1.
class NoisePolicy {
 public:
  enum class Stream : std::uint32_t { step = 0, initial = 1 };

  explicit NoisePolicy(std::uint64_t master_seed) : seed_(master_seed) {}

  std::uint64_t master_seed() const noexcept { return seed_; }

  std::complex<double> normal(std::uint64_t trajectory, std::uint64_t step, std::uint32_t mode,
                              Stream stream = Stream::step) const noexcept;

  /// Key for one trajectory; hoisted out of inner loops.
  std::array<std::uint32_t, 2> key_for(std::uint64_t trajectory) const noexcept;
  static std::complex<double> normal_with_key(std::array<std::uint32_t, 2> key, std::uint64_t step,
                                              std::uint32_t mode, Stream stream) noexcept;

 private:
  std::uint64_t seed_;
};

}  // namespace dks
