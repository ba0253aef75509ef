#include <doctest.h>

#include <cmath>

#include "dks/errors.hpp"
#include "dks/twa.hpp"
#include "support.hpp"

using namespace dks;
using dks::test::random_field;
using dks::test::rel_diff;

namespace {

Ensemble copies(const ModeField& f, int n, const ModelParams& m, double n_tilde) {
  Ensemble e;
  e.trajectories.assign(n, f);
  e.n_tilde = n_tilde;
  e.model_hash = model_hash(m);
  e.master_seed = 3;
  return e;
}

}  // namespace

TEST_CASE("noise draws are complex standard normals") {
  NoisePolicy p(42);
  const int n = 200000;
  double re = 0, im = 0, rr = 0, ii = 0, ri = 0;
  for (int k = 0; k < n; ++k) {
    const auto x = p.normal(k % 97, k / 97, k % 5);
    re += x.real();
    im += x.imag();
    rr += x.real() * x.real();
    ii += x.imag() * x.imag();
    ri += x.real() * x.imag();
  }
  const double tol = 3 / std::sqrt(n);
  CHECK(std::abs(re / n) < tol);
  CHECK(std::abs(im / n) < tol);
  CHECK(std::abs((rr + ii) / n - 1) < 5 * tol);
  CHECK(std::abs((rr - ii) / n) < 5 * tol);  // <xi xi> = 0
  CHECK(std::abs(ri / n) < tol);
  CHECK(p.normal(1, 2, 3) == NoisePolicy(42).normal(1, 2, 3));
  CHECK(p.normal(1, 2, 3) != p.normal(1, 2, 3, NoisePolicy::Stream::initial));
}

TEST_CASE("Philox reference vector") {
  // Known-answer test from the Random123 distribution (philox4x32_10, all-zero inputs).
  const auto z = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(z[0] == 0x6627e8d5u);
  CHECK(z[1] == 0xe169c58du);
  CHECK(z[2] == 0xbc57ac4cu);
  CHECK(z[3] == 0x9b00dbd8u);
  const auto w = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                            {0xa4093822u, 0x299f31d0u});
  CHECK(w[0] == 0xd16cfe09u);
  CHECK(w[1] == 0x94fdccebu);
  CHECK(w[2] == 0x5001e420u);
  CHECK(w[3] == 0x24126ea1u);
}

TEST_CASE("initial sampling") {
  const auto m = baseline_model(11);
  const auto f = random_field(11, 1, 5.0);
  const double nt = 0.02;
  const int n = 4000;
  const auto e = sample_initial(f, nt, n, NoisePolicy(9), model_hash(m));
  CHECK(e.size() == n);
  const double spread = 1 / std::sqrt(2 * nt);
  for (int i = 0; i < 11; ++i) {
    Complex mean = 0;
    double var = 0;
    for (const auto& t : e.trajectories) mean += t.amplitudes[i];
    mean /= n;
    for (const auto& t : e.trajectories) var += std::norm(t.amplitudes[i] - f.amplitudes[i]);
    var /= n;
    CHECK(std::abs(mean - f.amplitudes[i]) < 3 * spread / std::sqrt(n) * std::sqrt(2.0));
    CHECK(std::abs(var * 2 * nt - 1) < 5 / std::sqrt(n));
  }
  const auto again = sample_initial(f, nt, n, NoisePolicy(9), model_hash(m));
  CHECK(again.trajectories == e.trajectories);
  CHECK_THROWS_AS(sample_initial(f, 0.0, 10, NoisePolicy(1)), Error);
  CHECK_THROWS_AS(sample_initial(f, 1.0, 1, NoisePolicy(1)), Error);
}

TEST_CASE("without noise and shift every trajectory follows GP exactly") {
  const auto m = baseline_model(21);
  const auto f = sech_seed(m, 0);
  auto e = copies(f, 3, m, 1e-3);
  TwaOptions o;
  o.noise = false;
  o.wigner_shift = false;
  GpStepper gp(m, o.dt);
  auto ref = f.amplitudes;
  for (int s = 0; s < 200; ++s) {
    twa_step(e, m, o.dt, o);
    gp.step(ref);
  }
  for (const auto& t : e.trajectories) CHECK(t.amplitudes == ref);
  CHECK(e.step == 200);
  CHECK(e.time == doctest::Approx(200 * o.dt));
}

TEST_CASE("large N~ reduces TWA to GP") {
  const auto m = baseline_model(21);
  const auto f = sech_seed(m, 0);
  auto e = copies(f, 2, m, 1e30);
  ModeField g = f;
  for (int s = 0; s < 100; ++s) {
    twa_step(e, m, 5e-4);
    g = gp_step(g, m, 5e-4);
  }
  ModeField x(21);
  x.amplitudes = e.trajectories[1].amplitudes;
  CHECK(rel_diff(x, g) <= 1e-12);
}

TEST_CASE("ensemble and model must agree") {
  const auto m = baseline_model(7);
  auto e = copies(ModeField(7), 2, m, 1.0);
  auto other = m;
  other.sigma0 = -1.0;
  try {
    twa_step(e, other, 1e-3);
    FAIL("expected a hash mismatch");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::config);
  }
}

TEST_CASE("divergence reports the trajectory") {
  const auto m = baseline_model(7);
  auto e = copies(ModeField(7), 5, m, 1.0);
  e.trajectories[3].amplitudes[2] = {INFINITY, 0};
  try {
    twa_step(e, m, 1e-3);
    FAIL("expected divergence");
  } catch (const DivergenceError& d) {
    CHECK(d.trajectory() == 3);
  }
}

TEST_CASE("vacuum relaxes to half a quantum per mode") {
  auto m = baseline_model(5);
  m.g = 0;
  m.drive = 0;
  const double nt = 0.01;
  auto e = copies(ModeField(5), 1000, m, nt);  // starts below vacuum: no initial noise
  TimeSeriesRecord r;
  TwaOptions o;
  o.dt = 1e-3;
  CHECK(evolve_twa(e, m, 15, 5, r, o));
  const auto& last = r.ticks().back();
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(last.occupation[i]) < 4 * last.occupation_se[i]);
    CHECK((last.occupation[i] + 0.5) / nt * 2 * nt == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("driven linear ensemble mean follows the deterministic solution") {
  auto m = baseline_model(5);
  m.g = 0;
  const double nt = 1e-6;
  const auto e0 = sample_initial(ModeField(5), nt, 400, NoisePolicy(5), model_hash(m));
  auto e = e0;
  TimeSeriesRecord r;
  TwaOptions o;
  o.dt = 1e-3;
  evolve_twa(e, m, 4, 4, r, o);
  auto det = evolve_gp(ModeField(5), m, 4, 4, GpOptions{.dt = 1e-3}).field;
  const auto mean = EnsembleObserver::mean_modes(e);
  const double se = 1 / std::sqrt(2 * nt) / std::sqrt(400.0);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(mean[i] - det.amplitudes[i]) < 3 * se * std::sqrt(2.0));
}

TEST_CASE("records do not depend on the worker count") {
  const auto m = baseline_model(11);
  const auto f = sech_seed(m, 0);
  const auto e0 = sample_initial(f, 1e-4, 13, NoisePolicy(77), model_hash(m));
  TimeSeriesRecord ref;
  {
    auto e = e0;
    TwaOptions o;
    o.dt = 2e-3;
    o.field_cadence = 0.01;
    o.keep_density = true;
    evolve_twa(e, m, 1.0, 0.1, ref, o);
  }
  for (int w : {2, 3, 5, 13, 20}) {
    auto e = e0;
    TimeSeriesRecord r;
    TwaOptions o;
    o.dt = 2e-3;
    o.workers = w;
    o.field_cadence = 0.01;
    o.keep_density = true;
    evolve_twa(e, m, 1.0, 0.1, r, o);
    CHECK(r == ref);
  }
  CHECK(ref.size() == 11);
  CHECK(ref.field_samples().size() == 101);
}

TEST_CASE("interrupted runs resume bit-exactly") {
  const auto m = baseline_model(11);
  const auto e0 = sample_initial(sech_seed(m, 0), 1e-4, 6, NoisePolicy(8), model_hash(m));
  TwaOptions o;
  o.dt = 2e-3;
  o.checkpoint_every = 0.4;

  auto full = e0;
  TimeSeriesRecord full_rec;
  CHECK(evolve_twa(full, m, 2.0, 0.2, full_rec, o));

  Ensemble saved;
  TimeSeriesRecord saved_rec;
  auto halted = e0;
  TimeSeriesRecord halted_rec;
  auto stop = o;
  stop.on_checkpoint = [&](const Ensemble& e, const TimeSeriesRecord& r) {
    saved = e;
    saved_rec = r;
    return false;
  };
  CHECK_FALSE(evolve_twa(halted, m, 2.0, 0.2, halted_rec, stop));
  CHECK(saved.time == doctest::Approx(0.4));

  stop.workers = 3;
  stop.on_checkpoint = nullptr;
  CHECK(evolve_twa(saved, m, 2.0, 0.2, saved_rec, stop));
  CHECK(saved_rec == full_rec);
  CHECK(saved.trajectories == full.trajectories);
}
