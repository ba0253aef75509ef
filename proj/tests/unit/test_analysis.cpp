#include <doctest.h>

#include <cmath>
#include <random>

#include "dks/analysis.hpp"
#include "dks/errors.hpp"

using namespace dks;

namespace {

struct Series {
  std::vector<double> tau, c, se;
};

Series exponential(double lambda, double amp, double sigma, std::uint64_t seed, double tau0 = 0,
                   int n = 200, double span = 300) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 1);
  Series s;
  for (int i = 0; i < n; ++i) {
    const double tau = tau0 + span * i / (n - 1);
    s.tau.push_back(tau);
    s.c.push_back(1 + amp * std::exp(-lambda * (tau - tau0)) + sigma * noise(rng));
    s.se.push_back(sigma);
  }
  return s;
}

MeanFieldSeries tones(const std::vector<std::pair<double, Complex>>& lines, double dt, int n, double t0 = 0) {
  MeanFieldSeries s;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * dt;
    Complex v = 0;
    for (const auto& [w, a] : lines) v += a * std::exp(Complex{0, -w * t});
    s.t.push_back(t);
    s.value.push_back(v);
  }
  return s;
}

}  // namespace

TEST_CASE("noise-free exponential is recovered exactly") {
  const auto s = exponential(0.01, 0.5, 0, 1);
  const GapFit fit = fit_gap(s.tau, s.c, {});
  CHECK(fit.lambda == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(fit.amplitude == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(fit.tau_a >= 10);
  CHECK_FALSE(fit.warning.has_value());
}

TEST_CASE("fit is invariant under a uniform time shift") {
  const auto a = exponential(0.02, 0.4, 0.004, 7, 0);
  const auto b = exponential(0.02, 0.4, 0.004, 7, 50);
  FitWindow wa, wb;
  wa.tau_start = 10;
  wa.tau_end = 150;
  wb.tau_start = 60;
  wb.tau_end = 200;
  const auto fa = fit_gap(a.tau, a.c, a.se, wa);
  const auto fb = fit_gap(b.tau, b.c, b.se, wb);
  CHECK(fb.lambda == doctest::Approx(fa.lambda).epsilon(1e-9));
  CHECK(fb.lambda_se == doctest::Approx(fa.lambda_se).epsilon(1e-6));
  CHECK(fb.amplitude * std::exp(-fb.lambda * 50) == doctest::Approx(fa.amplitude).epsilon(1e-6));
}

TEST_CASE("noisy fits carry honest intervals") {
  const auto s = exponential(0.01, 0.5, 0.005, 3);
  const auto fit = fit_gap(s.tau, s.c, s.se);
  CHECK(std::abs(fit.lambda - 0.01) < 4 * fit.lambda_se);
  CHECK(fit.lambda_ci > 1.9 * fit.lambda_se);
  CHECK(fit.lambda_ci < 2.1 * fit.lambda_se);
  CHECK(fit.reduced_chi2 == doctest::Approx(1.0).epsilon(0.35));
}

TEST_CASE("fit failures are reported as no-signal") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.01);
  Series flat;
  for (int i = 0; i < 100; ++i) {
    flat.tau.push_back(i);
    flat.c.push_back(1 + noise(rng));
    flat.se.push_back(0.01);
  }
  try {
    fit_gap(flat.tau, flat.c, flat.se);
    FAIL("expected no-signal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_signal);
  }
  const auto few = exponential(0.01, 0.5, 0, 1, 0, 10, 100);
  CHECK_THROWS_AS(fit_gap(few.tau, few.c, {}), Error);
}

TEST_CASE("structured residuals raise a warning") {
  Series s;
  for (int i = 0; i < 200; ++i) {
    const double tau = 1.5 * i;
    s.tau.push_back(tau);
    s.c.push_back(1 + 0.5 / (1 + 0.05 * tau) * (1 + 0.02 * std::sin(0.1 * tau)));
    s.se.push_back(1e-4);
  }
  const auto fit = fit_gap(s.tau, s.c, s.se);
  CHECK(fit.warning.has_value());
}

TEST_CASE("exact power law") {
  std::vector<double> x{1e-5, 1e-4, 1e-3, 1e-2}, y;
  for (double v : x) y.push_back(2 / v);
  const auto p = power_law_fit(x, y);
  CHECK(p.a == doctest::Approx(-1).epsilon(1e-12));
  CHECK(p.b == doctest::Approx(2).epsilon(1e-12));
  CHECK(p.points == 4);

  std::vector<double> xs;
  for (double v : x) xs.push_back(7 * v);
  const auto q = power_law_fit(xs, y);
  CHECK(q.a == doctest::Approx(p.a).epsilon(1e-12));
  CHECK(q.b == doctest::Approx(p.b * std::pow(7.0, -p.a)).epsilon(1e-10));
}

TEST_CASE("power law input validation") {
  CHECK_THROWS_AS(power_law_fit(std::vector<double>{1, 10}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(power_law_fit(std::vector<double>{1, 3, 10}, std::vector<double>{1, 0, 2}), Error);
  CHECK_THROWS_AS(power_law_fit(std::vector<double>{1, 2, 5}, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("weighted power law is unbiased under heteroscedastic noise") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01(0, 1);
  const std::vector<double> x{1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
  const std::vector<double> rel{0.02, 0.05, 0.1, 0.2, 0.4};
  double mean_std_resid = 0;
  double mean_a = 0;
  int count = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> y, se;
    for (std::size_t i = 0; i < x.size(); ++i) {
      y.push_back(2 / x[i] * std::exp(rel[i] * n01(rng)));
      se.push_back(rel[i] * y.back());
    }
    const auto p = power_law_fit(x, y, se);
    mean_a += p.a / reps;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mean_std_resid += (std::log(y[i]) - std::log(p.b) - p.a * std::log(x[i])) / rel[i];
      ++count;
    }
  }
  CHECK(std::abs(mean_std_resid / count) < 0.1);
  CHECK(mean_a == doctest::Approx(-1).epsilon(0.02));
}

TEST_CASE("pure tone on a bin") {
  const double period = 2.0, nt = 3.0;
  const int per = 16;
  const double dt = period / per;
  const double w1 = 2 * constants::pi / period * 3;
  const auto s = tones({{w1, {1, 0}}}, dt, per * 50);
  const auto r = power_spectrum(s, nt, 0, 50, period);
  const auto peak = std::max_element(r.power.begin(), r.power.end()) - r.power.begin();
  CHECK(r.omega[peak] == doctest::Approx(w1));
  CHECK(r.power[peak] == doctest::Approx(2 * constants::pi * nt * nt).epsilon(1e-12));
  CHECK(r.resolution() == doctest::Approx(2 * constants::pi / (50 * period)));
}

TEST_CASE("two tones and Parseval") {
  const double period = 1.0;
  const int per = 32, periods = 40;
  const double dt = period / per;
  const double w = 2 * constants::pi;
  const auto s = tones({{w * 2, {1, 0}}, {-w * 5, {0, 0.5}}}, dt, per * periods + 7, 0);
  const auto r = power_spectrum(s, 1.0, 0, periods, period);
  double total = 0, mean_sq = 0;
  for (double p : r.power) total += p;
  for (int k = 0; k < per * periods; ++k) mean_sq += std::norm(s.value[k]);
  mean_sq /= per * periods;
  CHECK(total == doctest::Approx(2 * constants::pi * mean_sq).epsilon(1e-10));
  const auto at = [&](double om) {
    const auto i = std::lower_bound(r.omega.begin(), r.omega.end(), om - 1e-9) - r.omega.begin();
    return r.power[i];
  };
  CHECK(at(-w * 5) / at(w * 2) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("spectrum input validation") {
  const auto s = tones({{1.0, {1, 0}}}, 0.1, 100);
  CHECK_THROWS_AS(power_spectrum(s, 1, 0, 100, 1.0), Error);  // too short
  CHECK_THROWS_AS(power_spectrum(s, 1, 0, 2, 0.15), Error);   // undersampled
  CHECK_THROWS_AS(power_spectrum(s, 1, -1.0, 2, 1.0), Error); // starts before the series
}

TEST_CASE("synthetic comb spacing is recovered below the bin size") {
  const double spacing = 1858.7;
  const double period = 2 * constants::pi / spacing;
  const int per = 24, periods = 300;
  // sample slightly off the comb so lines fall between bins
  const double dt = period / per * 1.0137;
  std::vector<std::pair<double, Complex>> lines;
  for (int l = -10; l <= 10; ++l) lines.push_back({l * spacing, {std::exp(-0.1 * std::abs(l)), 0}});
  const auto s = tones(lines, dt, per * periods + 10);
  const auto r = power_spectrum(s, 1.0, 0, periods - 10, period);
  const auto comb = comb_spacing(r);
  CHECK(comb.peaks.size() == 21);
  CHECK(std::abs(comb.spacing - spacing) <= 0.1 * r.resolution());

  auto loud = r;
  for (auto& p : loud.power) p *= 1e6;
  CHECK(comb_spacing(loud).spacing == doctest::Approx(comb.spacing).epsilon(1e-12));
}

TEST_CASE("white noise has no comb") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01(0, 1);
  MeanFieldSeries s;
  for (int k = 0; k < 256; ++k) {
    s.t.push_back(k * 0.01);
    s.value.push_back({n01(rng), n01(rng)});
  }
  const auto r = power_spectrum(s, 1.0, 0, 128, 0.02);
  try {
    comb_spacing(r);
    FAIL("expected insufficient comb");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_signal);
    CHECK(std::string(e.what()).find("insufficient comb") != std::string::npos);
  }
}

TEST_CASE("serially correlated noise widens the interval instead of flagging the fit") {
  // AR(1) noise with per-point sd sigma and lag-1 correlation 0.9, like the contrast of a
  // fixed ensemble sampled at consecutive ticks.
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01(0, 1);
  const double sigma = 0.005, rho = 0.9;
  int covered = 0, warned = 0;
  double mean_tau = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> tau, c, se;
    double e = sigma * n01(rng);
    for (int i = 0; i < 200; ++i) {
      tau.push_back(1.5 * i);
      c.push_back(1 + 0.5 * std::exp(-0.01 * tau.back()) + e);
      se.push_back(sigma);
      e = rho * e + std::sqrt(1 - rho * rho) * sigma * n01(rng);
    }
    const auto f = fit_gap(tau, c, se);
    if (std::abs(f.lambda - 0.01) <= f.lambda_ci) ++covered;
    if (f.warning) ++warned;
    mean_tau += f.autocorrelation_time / 100;
  }
  CHECK(covered >= 85);
  CHECK(warned <= 5);
  CHECK(mean_tau > 5);  // 1 + 2 rho / (1 - rho) = 19 for the full sum
}

TEST_CASE("independent noise keeps the plain interval") {
  std::mt19937_64 rng(78);
  std::normal_distribution<double> n01(0, 0.005);
  double mean_tau = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> tau, c, se;
    for (int i = 0; i < 200; ++i) {
      tau.push_back(1.5 * i);
      c.push_back(1 + 0.5 * std::exp(-0.01 * tau.back()) + n01(rng));
      se.push_back(0.005);
    }
    mean_tau += fit_gap(tau, c, se).autocorrelation_time / 50;
  }
  CHECK(mean_tau < 1.5);
}
