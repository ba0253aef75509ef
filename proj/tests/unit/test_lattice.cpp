#include <doctest.h>

#include <cmath>

#include "dks/errors.hpp"
#include "dks/lattice.hpp"
#include "support.hpp"

using namespace dks;
using dks::test::close;

namespace {

PhysicalParams si3n4() {
  PhysicalParams p;
  p.radius_m = 100e-6;
  p.a_eff_m2 = 0.73 * 2.5e-12;
  p.quality_factor = 1.5e6;
  p.f0_hz = 193.5e12;
  p.n0 = 1.99;
  p.n2_m2_per_w = 2.4e-19;
  p.beta2_s2_per_m = -4.79e-26;
  p.sigma0_rad_per_s = -1.024 * (2 * constants::pi * 193.5e12 / 1.5e6);
  p.p_ext_w = 0.0168;
  p.modes = 21;
  return p;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("silicon nitride ring converts to the quoted rates") {
  const auto d = derive_model_params(si3n4());
  const auto& m = d.model;
  REQUIRE(m.kappa_per_s);
  CHECK(*m.kappa_per_s == doctest::Approx(8.1e8).epsilon(0.01));
  CHECK(m.g == doctest::Approx(3.05e-9).epsilon(0.005));
  CHECK(m.g * *m.kappa_per_s == doctest::Approx(2.47).epsilon(0.01));
  CHECK(m.d1 == doctest::Approx(1858.7).epsilon(1e-3));
  CHECK(m.d2 == doctest::Approx(0.0202).epsilon(0.01));
  CHECK(m.sigma0 == doctest::Approx(-1.024).epsilon(1e-12));
  CHECK_FALSE(d.normal_dispersion);
}

TEST_CASE("doubling Q halves kappa and doubles g/kappa") {
  auto p = si3n4();
  const auto a = derive_model_params(p).model;
  p.quality_factor *= 2;
  p.sigma0_rad_per_s = *p.sigma0_rad_per_s / 2;
  const auto b = derive_model_params(p).model;
  CHECK(*b.kappa_per_s == doctest::Approx(*a.kappa_per_s / 2).epsilon(1e-14));
  CHECK(b.g * *b.kappa_per_s == doctest::Approx(a.g * *a.kappa_per_s).epsilon(1e-14));
  CHECK(b.g == doctest::Approx(2 * a.g).epsilon(1e-14));
}

TEST_CASE("drive conversion round-trips through the external power") {
  const auto p = si3n4();
  const auto m = derive_model_params(p).model;
  const double back = external_power_w(*m.omega_p_rad_per_s, *m.kappa_per_s, m.drive, p.eta);
  CHECK(close(back, p.p_ext_w, 1e-12));
}

TEST_CASE("physical parameters are validated") {
  auto p = si3n4();
  p.quality_factor = 0;
  CHECK(kind_of([&] { derive_model_params(p); }) == ErrorKind::domain);
  p = si3n4();
  p.beta2_s2_per_m = 1e-26;
  const auto d = derive_model_params(p);
  CHECK(d.normal_dispersion);
  CHECK_FALSE(d.warnings.empty());
  CHECK_THROWS_AS(d.model.require_anomalous_dispersion(), Error);
}

TEST_CASE("detuning profile") {
  auto m = baseline_model(21);
  m.co_rotating = false;
  const auto lab = detuning_profile(m);
  CHECK(lab[m.index_of(0)] == m.sigma0);
  CHECK(lab[m.index_of(1)] == doctest::Approx(-1.024 - 1858.7 - 0.0101).epsilon(1e-14));
  m.co_rotating = true;
  const auto rot = detuning_profile(m);
  for (int l = -10; l <= 10; ++l) {
    CHECK(rot[m.index_of(l)] == rot[m.index_of(-l)]);
    CHECK(lab[m.index_of(l)] - rot[m.index_of(l)] == doctest::Approx(-m.d1 * l).epsilon(1e-12));
  }
}

TEST_CASE("integrated dispersion") {
  const auto m = baseline_model(21);
  CHECK(integrated_dispersion(m, 0) == 0);
  CHECK(integrated_dispersion(m, 10) == doctest::Approx(1.01).epsilon(1e-14));
  CHECK(integrated_dispersion(m, -7) == integrated_dispersion(m, 7));
  CHECK(kind_of([&] { integrated_dispersion(m, 11); }) == ErrorKind::index);
}

TEST_CASE("soliton threshold") {
  auto m = baseline_model(21);
  const auto t = soliton_threshold(m);
  CHECK(t.drive_threshold == doctest::Approx(std::sqrt(0.5 / 3.05e-9)).epsilon(1e-14));
  CHECK(t.drive_threshold == doctest::Approx(1.2804e4).epsilon(1e-4));
  CHECK(t.above);
  m.drive = t.drive_threshold;
  CHECK_FALSE(soliton_threshold(m).above);
  m.g = 0;
  CHECK(kind_of([&] { soliton_threshold(m); }) == ErrorKind::domain);
}

TEST_CASE("rescale preserves F^2 g and composes") {
  const auto m = baseline_model(21);
  CHECK(rescale(m, 1.0).g == m.g);
  CHECK(rescale(m, 1.0).drive == m.drive);
  const auto r = rescale(m, 1e-4);
  CHECK(r.g == doctest::Approx(3.05e-13).epsilon(1e-14));
  CHECK(r.drive == doctest::Approx(1.8e6).epsilon(1e-14));
  for (double n : {1e-6, 1e-3, 0.5, 7.0, 1e3, 1e6}) {
    const auto s = rescale(m, n);
    CHECK(close(s.drive * s.drive * s.g, m.drive * m.drive * m.g, 1e-12));
    const auto ab = rescale(rescale(m, n), 3.3);
    const auto direct = rescale(m, n * 3.3);
    CHECK(close(ab.g, direct.g, 1e-12));
    CHECK(close(ab.drive, direct.drive, 1e-12));
  }
  CHECK(kind_of([&] { rescale(m, 0.0); }) == ErrorKind::domain);
}

TEST_CASE("model validation") {
  auto m = baseline_model(21);
  m.modes = 20;
  CHECK(kind_of([&] { m.validate(); }) == ErrorKind::domain);
  m = baseline_model(21);
  m.n_tilde = -1;
  CHECK(kind_of([&] { m.validate(); }) == ErrorKind::domain);
}

TEST_CASE("model hash ignores N~ but not the equation parameters") {
  auto a = baseline_model(21);
  auto b = a;
  b.n_tilde = 1e-4;
  CHECK(model_hash(a) == model_hash(b));
  b.g *= 1.0000001;
  CHECK(model_hash(a) != model_hash(b));
}

TEST_CASE("parameter files carry units and reject mixtures") {
  using nlohmann::json;
  json ok = {{"g_over_kappa", 3.05e-9}, {"sigma0_over_kappa", -1.024}, {"d1_over_kappa", 1858.7},
             {"d2_over_kappa", 0.0202}, {"drive_f", 1.8e4}, {"modes", 21}};
  const auto m = model_from_json(ok);
  CHECK(m.g == 3.05e-9);
  CHECK(model_hash(model_from_json(model_to_json(m))) == model_hash(m));

  json si = ok;
  si.erase("g_over_kappa");
  si["g_per_s"] = 2.47;
  CHECK(kind_of([&] { model_from_json(si); }) == ErrorKind::config);
  si["kappa_per_s"] = 8.1e8;
  CHECK(model_from_json(si).g == doctest::Approx(2.47 / 8.1e8));

  json mixed = ok;
  mixed["g_per_s"] = 2.47;
  mixed["kappa_per_s"] = 8.1e8;
  CHECK(kind_of([&] { model_from_json(mixed); }) == ErrorKind::config);

  json unknown = ok;
  unknown["gamma"] = 1;
  CHECK(kind_of([&] { model_from_json(unknown); }) == ErrorKind::config);
}
