#include "dks/rng.hpp"

#include <cmath>

namespace dks {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t{a} * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform in (0, 1) with 53 random bits; never returns 0.
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 2> NoisePolicy::key_for(std::uint64_t trajectory) const noexcept {
  const std::uint64_t k = splitmix64(seed_ ^ splitmix64(trajectory + 0x632BE59BD9B4E019ULL));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::complex<double> NoisePolicy::normal_with_key(std::array<std::uint32_t, 2> key,
                                                  std::uint64_t step, std::uint32_t mode,
                                                  Stream stream) noexcept {
  const auto r = philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                             mode, static_cast<std::uint32_t>(stream)},
                            key);
  // Box-Muller: |xi|^2 = -log u is Exp(1), so each quadrature has variance 1/2.
  const double radius = std::sqrt(-std::log(open_unit(r[0], r[1])));
  const double angle = 2 * 3.14159265358979323846 * open_unit(r[2], r[3]);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::complex<double> NoisePolicy::normal(std::uint64_t trajectory, std::uint64_t step,
                                         std::uint32_t mode, Stream stream) const noexcept {
  return normal_with_key(key_for(trajectory), step, mode, stream);
}

}  // namespace dks
