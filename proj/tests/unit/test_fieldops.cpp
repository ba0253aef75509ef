#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dks/errors.hpp"
#include "dks/fieldops.hpp"
#include "support.hpp"

using namespace dks;
using dks::test::random_field;
using dks::test::rel_diff;

TEST_CASE("naive FWM on hand-enumerated fields") {
  ModeField one(3);
  one.at_mode(0) = {1.5, -0.5};
  const auto out = fwm_naive(one, 0.7);
  CHECK(std::abs(out.at_mode(0) - 0.7 * std::norm(one.at_mode(0)) * one.at_mode(0)) < 1e-15);
  CHECK(out.at_mode(1) == Complex{});
  CHECK(out.at_mode(-1) == Complex{});

  ModeField pair(3);
  const double A = 1.3;
  pair.at_mode(-1) = A;
  pair.at_mode(1) = A;
  const auto p = fwm_naive(pair, 2.0);
  CHECK(std::abs(p.at_mode(0)) < 1e-15);
  CHECK(p.at_mode(1).real() == doctest::Approx(3 * 2.0 * A * A * A));
  CHECK(p.at_mode(-1).real() == doctest::Approx(3 * 2.0 * A * A * A));
}

TEST_CASE("spectral FWM equals the naive oracle") {
  for (int modes : {1, 3, 7, 11, 21, 51}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto f = random_field(modes, 1000 * modes + s);
      CHECK(rel_diff(fwm_spectral(f, 0.37), fwm_naive(f, 0.37)) <= 1e-12);
    }
  }
  CHECK(dealiased_grid(21) == 64);
  CHECK(dealiased_grid(101) == 256);
  CHECK(fwm_spectral(ModeField(21), 1.0).norm2() == 0);
}

TEST_CASE("FWM is cubic and phase covariant") {
  const auto f = random_field(11, 5);
  const auto base = fwm_spectral(f, 1.0);
  const Complex s{0.3, -1.7};
  ModeField scaled = f;
  for (auto& a : scaled.amplitudes) a *= s;
  ModeField expected = base;
  for (auto& a : expected.amplitudes) a *= s * std::norm(s);
  CHECK(rel_diff(fwm_spectral(scaled, 1.0), expected) <= 1e-12);
}

TEST_CASE("FwmKernel works in place") {
  const auto f = random_field(21, 9);
  FwmKernel k(21);
  auto buf = f.amplitudes;
  k.apply(buf, buf, 2.5);
  ModeField out(21);
  out.amplitudes = buf;
  CHECK(rel_diff(out, fwm_naive(f, 2.5)) <= 1e-12);
}

TEST_CASE("linear step is exact") {
  const auto f = random_field(7, 3);
  std::vector<double> zero(7, 0.0);
  const auto decayed = linear_step(f, zero, 1.0, 0.3);
  for (int i = 0; i < 7; ++i)
    CHECK(std::abs(decayed.amplitudes[i] - f.amplitudes[i] * std::exp(-0.15)) < 1e-15);

  std::vector<double> sigma{-3.0, 1.0, 0.5, -1.024, 2.0, 7.0, -9.0};
  const auto unitary = linear_step(f, sigma, 0.0, 0.77);
  for (int i = 0; i < 7; ++i)
    CHECK(std::abs(unitary.amplitudes[i]) == doctest::Approx(std::abs(f.amplitudes[i])).epsilon(1e-15));

  const auto once = linear_step(f, sigma, 1.0, 0.2);
  const auto twice = linear_step(linear_step(f, sigma, 1.0, 0.1), sigma, 1.0, 0.1);
  CHECK(rel_diff(twice, once) <= 1e-14);
  CHECK(once.norm2() * std::exp(0.2) == doctest::Approx(f.norm2()).epsilon(1e-12));
}

TEST_CASE("real-space transform") {
  ModeField single(5);
  single.at_mode(0) = {2.0, 1.0};
  const auto psi = to_real_space(single, 64);
  for (const auto& v : psi.values)
    CHECK(std::abs(v - single.at_mode(0) / std::sqrt(2 * std::numbers::pi)) < 1e-14);

  ModeField flat(9);
  for (auto& a : flat.amplitudes) a = 1.0;
  const auto d = to_real_space(flat, 64);
  int peak = 0;
  for (int k = 1; k < 64; ++k)
    if (std::abs(d.values[k]) > std::abs(d.values[peak])) peak = k;
  CHECK(peak == 0);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = random_field(21, s);
    const auto r = to_real_space(f, 256);
    CHECK(r.integral_density() == doctest::Approx(f.norm2()).epsilon(1e-12));
    CHECK(rel_diff(project_to_modes(r, 21), f) <= 1e-12);
  }
  CHECK_THROWS_AS(to_real_space(random_field(21, 0), 16), Error);
}
