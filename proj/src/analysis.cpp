#include "dks/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "dks/errors.hpp"
#include "fft.hpp"

namespace dks {

namespace {

double t_quantile_975(int dof) {
  boost::math::students_t dist(static_cast<double>(std::max(dof, 1)));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

struct Line {
  double intercept = 0, slope = 0;
  double var_intercept = 0, var_slope = 0, cov = 0;
  double chi2 = 0;
};

// Weighted least squares for y = intercept + slope x.
Line weighted_line(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0)) fail(ErrorKind::domain, "regression abscissae are degenerate");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = ym - l.slope * xm;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - l.intercept - l.slope * x[i];
    l.chi2 += w[i] * r * r;
  }
  l.var_slope = 1 / sxx;
  l.var_intercept = 1 / sw + xm * xm / sxx;
  l.cov = -xm / sxx;
  return l;
}

// Wald-Wolfowitz runs test on residual signs; large negative z means long same-sign runs.
double runs_z(std::span<const double> r) {
  int pos = 0, neg = 0, runs = 0;
  int last = 0;
  for (double v : r) {
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0) continue;
    (s > 0 ? pos : neg)++;
    if (s != last) ++runs;
    last = s;
  }
  const double n = pos + neg;
  if (pos == 0 || neg == 0) return -std::numeric_limits<double>::infinity();
  const double mu = 2.0 * pos * neg / n + 1;
  const double var = (mu - 1) * (mu - 2) / (n - 1);
  return var > 0 ? (runs - mu) / std::sqrt(var) : 0;
}

// 1 + 2 sum_k rho_k over the initial positive part of the autocorrelation; >= 1.
double integrated_autocorrelation(const std::vector<double>& r) {
  const std::size_t n = r.size();
  if (n < 8) return 1;
  double mean = 0;
  for (double v : r) mean += v;
  mean /= n;
  double c0 = 0;
  for (double v : r) c0 += (v - mean) * (v - mean);
  if (!(c0 > 0)) return 1;
  double t = 1;
  for (std::size_t k = 1; k < n / 4; ++k) {
    double ck = 0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (r[i] - mean) * (r[i + k] - mean);
    const double rho = ck / c0;
    if (rho <= 0) break;
    t += 2 * rho;
  }
  return std::max(1.0, t);
}

}  // namespace

GapFit fit_gap(std::span<const double> tau, std::span<const double> c, std::span<const double> c_se,
               const FitWindow& window) {
  const std::size_t n = tau.size();
  if (c.size() != n || (!c_se.empty() && c_se.size() != n))
    fail(ErrorKind::domain, "fit_gap: series lengths differ");
  if (n == 0) fail(ErrorKind::no_signal, "fit_gap: empty record");
  auto se = [&](std::size_t i) { return c_se.empty() ? 0.0 : c_se[i]; };

  std::size_t a = 0;
  if (window.tau_start) {
    while (a < n && tau[a] < *window.tau_start) ++a;
  } else {
    const double initial = c[0] - 1;
    std::size_t drop = n, skip = n;
    for (std::size_t i = 0; i < n; ++i)
      if (c[i] - 1 < 0.8 * initial) {
        drop = i;
        break;
      }
    for (std::size_t i = 0; i < n; ++i)
      if (tau[i] >= window.transient_skip_tau) {
        skip = i;
        break;
      }
    a = std::min(drop, skip);
  }
  std::size_t b = a;
  while (b < n && (!window.tau_end || tau[b] <= *window.tau_end)) {
    if (!window.tau_end && se(b) > 0 && c[b] - 1 < 3 * se(b)) break;
    ++b;
  }

  std::vector<double> x, y, w, sig;
  for (std::size_t i = a; i < b; ++i) {
    if (!std::isfinite(c[i])) continue;
    x.push_back(tau[i]);
    y.push_back(c[i] - 1);
    sig.push_back(se(i));
    w.push_back(se(i) > 0 ? 1 / (se(i) * se(i)) : 1.0);
  }
  const int m = static_cast<int>(x.size());
  if (m < window.min_points)
    fail(ErrorKind::no_signal, "fit_gap: only " + std::to_string(m) + " points in the fit window (need " +
                                   std::to_string(window.min_points) + ")");

  // Log-linear start from points clearly above the noise.
  std::vector<double> lx, ly, lw;
  for (int i = 0; i < m; ++i) {
    if (y[i] > 3 * sig[i]) {
      lx.push_back(x[i]);
      ly.push_back(std::log(y[i]));
      lw.push_back(w[i] * y[i] * y[i]);
    }
  }
  if (lx.size() < 2) fail(ErrorKind::no_signal, "fit_gap: C - 1 never exceeds 3 standard errors");

  // Parameters (A0, Lambda) with A0 the amplitude at the window start, for conditioning.
  const double x0 = x.front();
  double lambda, a0;
  {
    std::vector<double> sx(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) sx[i] = lx[i] - x0;
    const auto l = weighted_line(sx, ly, lw);
    lambda = -l.slope;
    a0 = std::exp(l.intercept);
  }

  auto chi2_at = [&](double A, double L) {
    double s = 0;
    for (int i = 0; i < m; ++i) {
      const double r = y[i] - A * std::exp(-L * (x[i] - x0));
      s += w[i] * r * r;
    }
    return s;
  };

  double chi2 = chi2_at(a0, lambda);
  double mu = 1e-3;
  double jtj[2][2] = {};
  for (int it = 0; it < 200; ++it) {
    double g[2] = {0, 0};
    jtj[0][0] = jtj[0][1] = jtj[1][1] = 0;
    for (int i = 0; i < m; ++i) {
      const double e = std::exp(-lambda * (x[i] - x0));
      const double r = y[i] - a0 * e;
      const double j0 = e, j1 = -a0 * (x[i] - x0) * e;
      jtj[0][0] += w[i] * j0 * j0;
      jtj[0][1] += w[i] * j0 * j1;
      jtj[1][1] += w[i] * j1 * j1;
      g[0] += w[i] * j0 * r;
      g[1] += w[i] * j1 * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      const double m00 = jtj[0][0] * (1 + mu), m11 = jtj[1][1] * (1 + mu), m01 = jtj[0][1];
      const double det = m00 * m11 - m01 * m01;
      if (!(det > 0)) {
        mu *= 10;
        continue;
      }
      const double d0 = (m11 * g[0] - m01 * g[1]) / det;
      const double d1 = (m00 * g[1] - m01 * g[0]) / det;
      const double trial = chi2_at(a0 + d0, lambda + d1);
      if (trial <= chi2) {
        const double rel = (chi2 - trial) / std::max(chi2, 1e-300);
        a0 += d0;
        lambda += d1;
        chi2 = trial;
        mu = std::max(mu / 10, 1e-12);
        improved = true;
        if (rel < 1e-15 && std::abs(d1) <= 1e-14 * std::abs(lambda) + 1e-300) it = 1000;
      } else {
        mu *= 10;
      }
    }
    if (!improved) break;
  }

  const int dof = m - 2;
  const double red = dof > 0 ? chi2 / dof : 0;
  const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[0][1];
  if (!(det > 0)) fail(ErrorKind::no_signal, "fit_gap: singular fit covariance");

  std::vector<double> res(m), std_res(m);
  for (int i = 0; i < m; ++i) {
    res[i] = y[i] - a0 * std::exp(-lambda * (x[i] - x0));
    std_res[i] = res[i] * std::sqrt(w[i]);
  }
  // Ticks of one ensemble share trajectories, so their errors are serially correlated;
  // the covariance is inflated by the residuals' integrated autocorrelation time.
  const double tau_int = integrated_autocorrelation(std_res);
  const bool weighted = !c_se.empty();
  const double scale = (weighted ? std::max(red, 1.0) : (red > 0 ? red : 1)) * tau_int;
  const double v00 = jtj[1][1] / det * scale, v11 = jtj[0][0] / det * scale, v01 = -jtj[0][1] / det * scale;
  const int eff_dof = std::max(1, static_cast<int>(m / tau_int) - 2);

  GapFit f;
  f.lambda = lambda;
  f.amplitude = a0 * std::exp(lambda * x0);
  // A = A0 e^{Lambda x0}
  const double da0 = std::exp(lambda * x0), dl = x0 * f.amplitude;
  f.lambda_se = std::sqrt(v11);
  f.amplitude_se = std::sqrt(std::max(0.0, da0 * da0 * v00 + 2 * da0 * dl * v01 + dl * dl * v11));
  const double q = t_quantile_975(eff_dof);
  f.lambda_ci = q * f.lambda_se;
  f.amplitude_ci = q * f.amplitude_se;
  f.tau_a = x.front();
  f.tau_b = x.back();
  f.points = m;
  f.residual_norm = std::sqrt(chi2);
  f.reduced_chi2 = red;
  f.autocorrelation_time = tau_int;

  if (!(lambda > 0) || !std::isfinite(lambda))
    fail(ErrorKind::no_signal, "fit_gap: contrast is not decaying (Lambda = " + std::to_string(lambda) + ")");

  // Sign runs alone cannot tell correlated noise from misfit; structure counts only when
  // the residuals also exceed their error bars (chi^2 excess at 3 sigma).
  const double z = runs_z(res);
  const bool excess = !weighted || dof <= 0 || red > 1 + 3 * std::sqrt(2.0 / dof);
  if (z < window.runs_z_threshold && excess)
    f.warning = "poor fit: residual sign runs z = " + std::to_string(z) + " with reduced chi2 = " +
                std::to_string(red) + " indicate non-exponential structure";
  return f;
}

GapFit fit_gap(const TimeSeriesRecord& record, const FitWindow& window) {
  const auto tau = record.taus();
  const auto c = record.contrasts();
  const auto se = record.contrast_errors();
  return fit_gap(tau, c, se, window);
}

PowerLaw power_law_fit(std::span<const double> x, std::span<const double> y, std::span<const double> y_se) {
  const std::size_t n = x.size();
  if (y.size() != n || (!y_se.empty() && y_se.size() != n))
    fail(ErrorKind::domain, "power_law_fit: series lengths differ");
  if (n < 3) fail(ErrorKind::domain, "power_law_fit: needs at least 3 points");
  std::vector<double> lx(n), ly(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) fail(ErrorKind::domain, "power_law_fit: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    if (!y_se.empty()) {
      if (!(y_se[i] > 0)) fail(ErrorKind::domain, "power_law_fit: uncertainties must be positive");
      const double s = y_se[i] / y[i];
      w[i] = 1 / (s * s);
    }
  }
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (*mx / *mn < 10 * (1 - 1e-12)) fail(ErrorKind::domain, "power_law_fit: x must span at least one decade");

  const auto l = weighted_line(lx, ly, w);
  const int dof = static_cast<int>(n) - 2;
  const double red = l.chi2 / dof;
  // Unweighted input carries no error scale: the residual scatter supplies it.
  const double scale = y_se.empty() ? red : std::max(red, 1.0);
  PowerLaw p;
  p.a = l.slope;
  p.b = std::exp(l.intercept);
  p.a_se = std::sqrt(l.var_slope * scale);
  p.log_b_se = std::sqrt(l.var_intercept * scale);
  const double q = t_quantile_975(dof);
  p.a_ci = q * p.a_se;
  p.b_low = p.b * std::exp(-q * p.log_b_se);
  p.b_high = p.b * std::exp(q * p.log_b_se);
  p.points = static_cast<int>(n);
  p.reduced_chi2 = red;
  return p;
}

SpectrumResult power_spectrum(const MeanFieldSeries& series, double n_tilde, double t0, double periods,
                              double period) {
  if (!(period > 0) || !(periods > 0)) fail(ErrorKind::domain, "spectrum window must be positive");
  const auto& t = series.t;
  if (t.size() < 2) fail(ErrorKind::domain, "spectrum needs a sampled series");
  const double dt = t[1] - t[0];
  if (!(dt > 0)) fail(ErrorKind::domain, "spectrum samples must increase in time");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) fail(ErrorKind::domain, "spectrum samples are not uniform");
  if (dt > period / 2) fail(ErrorKind::domain, "spectrum needs at least 2 samples per period");

  const double span = periods * period;
  const auto first = static_cast<std::size_t>(
      std::lower_bound(t.begin(), t.end(), t0 - 0.5 * dt) - t.begin());
  const auto count = static_cast<std::size_t>(std::llround(span / dt));
  if (first >= t.size() || std::abs(t[first] - t0) > 0.5 * dt)
    fail(ErrorKind::domain, "series does not start at t0");
  if (first + count > t.size())
    fail(ErrorKind::domain, "series is shorter than the requested " + std::to_string(periods) + " periods");
  if (count < 2) fail(ErrorKind::domain, "spectrum window holds fewer than 2 samples");

  const int N = static_cast<int>(count);
  FftPlan plan(N, false);  // e^{+i omega t}
  auto buf = plan.data();
  for (int k = 0; k < N; ++k) buf[k] = series.value[first + k];
  plan.execute();

  SpectrumResult r;
  r.t0 = t0;
  r.periods = periods;
  r.period = period;
  r.dt = dt;
  r.n_tilde = n_tilde;
  r.omega.resize(N);
  r.power.resize(N);
  const double scale = 2 * constants::pi * n_tilde * n_tilde / (static_cast<double>(N) * N);
  const double domega = 2 * constants::pi / (N * dt);
  const int lo = -(N / 2);
  for (int i = 0; i < N; ++i) {
    const int j = lo + i;
    const int bin = ((j % N) + N) % N;
    r.omega[i] = j * domega;
    r.power[i] = scale * std::norm(buf[bin]);
  }
  return r;
}

CombSpacing comb_spacing(const SpectrumResult& s, double prominence, int min_separation_bins,
                         double relative_floor) {
  const auto n = s.power.size();
  if (n < 3) fail(ErrorKind::no_signal, "spectrum too short for peak detection");
  std::vector<double> sorted(s.power);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  // A noise-free spectrum has a roundoff-level median; never treat the floor as signal.
  const double floor = relative_floor * *std::max_element(s.power.begin(), s.power.end());
  const double threshold = std::max(prominence * sorted[n / 2], floor);
  const double domega = s.resolution();
  const int w = std::max(1, min_separation_bins);

  CombSpacing out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double p = s.power[i];
    if (!(p > threshold)) continue;
    bool is_max = true;
    for (int k = 1; k <= w && is_max; ++k) {
      if (i >= static_cast<std::size_t>(k) && s.power[i - k] > p) is_max = false;
      if (i + k < n && s.power[i + k] >= p) is_max = false;
    }
    if (!is_max) continue;
    const double ym = s.power[i - 1], y0 = p, yp = s.power[i + 1];
    const double den = ym - 2 * y0 + yp;
    const double delta = den < 0 ? std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5) : 0.0;
    out.peaks.push_back(s.omega[i] + delta * domega);
  }
  if (out.peaks.size() < 3)
    fail(ErrorKind::no_signal, "insufficient comb: " + std::to_string(out.peaks.size()) +
                                   " peaks above " + std::to_string(prominence) + "x median power");

  std::vector<double> gaps;
  for (std::size_t i = 1; i < out.peaks.size(); ++i) gaps.push_back(out.peaks[i] - out.peaks[i - 1]);
  const double smallest = *std::min_element(gaps.begin(), gaps.end());
  for (auto& g : gaps) g /= std::max(1.0, std::round(g / smallest));
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
  double var = 0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  out.spacing = mean;
  out.standard_error = gaps.size() > 1 ? std::sqrt(var / (gaps.size() - 1) / gaps.size()) : 0;
  return out;
}

}  // namespace dks
