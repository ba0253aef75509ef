#include "dks/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dks/errors.hpp"
#include "dks/io.hpp"

namespace dks {

using nlohmann::json;

json to_json(const GapFit& f) {
  json j = {{"lambda_over_kappa", f.lambda},
            {"lambda_se", f.lambda_se},
            {"lambda_ci95", f.lambda_ci},
            {"amplitude", f.amplitude},
            {"amplitude_se", f.amplitude_se},
            {"amplitude_ci95", f.amplitude_ci},
            {"tau_window", {f.tau_a, f.tau_b}},
            {"points", f.points},
            {"residual_norm", f.residual_norm},
            {"reduced_chi2", f.reduced_chi2},
            {"residual_autocorrelation_ticks", f.autocorrelation_time}};
  j["warning"] = f.warning ? json(*f.warning) : json(nullptr);
  return j;
}

json to_json(const PowerLaw& p) {
  return {{"a", p.a},           {"a_se", p.a_se},     {"a_ci95", p.a_ci},
          {"b", p.b},           {"b_ci95", {p.b_low, p.b_high}},
          {"points", p.points}, {"reduced_chi2", p.reduced_chi2}};
}

json to_json(const RecordMeta& m) {
  return {{"kind", m.kind},
          {"modes", m.modes},
          {"grid", m.grid},
          {"n_tilde", m.n_tilde},
          {"co_rotating", m.co_rotating},
          {"d1_over_kappa", m.d1},
          {"dt_inv_kappa", m.dt},
          {"model_hash", hex64(m.model_hash)},
          {"config_hash", hex64(m.config_hash)},
          {"seed", m.seed},
          {"n_traj", m.n_traj},
          {"vacuum_subtracted", m.vacuum_subtracted},
          {"code_version", m.version}};
}

json spectrum_summary(const SpectrumResult& s) {
  double total = 0;
  for (double p : s.power) total += p;
  return {{"t0_inv_kappa", s.t0},
          {"periods", s.periods},
          {"period_inv_kappa", s.period},
          {"dt_inv_kappa", s.dt},
          {"resolution_kappa", s.resolution()},
          {"bins", s.omega.size()},
          {"total_power", total}};
}

std::string spectrum_tsv(const SpectrumResult& s) {
  std::ostringstream os;
  os << "# columns: omega[kappa] S[dimensionless]\nomega\tS\n";
  char b[64];
  for (std::size_t i = 0; i < s.omega.size(); ++i) {
    std::snprintf(b, sizeof b, "%.17g\t%.17g\n", s.omega[i], s.power[i]);
    os << b;
  }
  return os.str();
}

namespace {
json error_json(const Error& e) {
  return {{"exit_code", exit_code(e.kind())}, {"message", e.what()}};
}
}  // namespace

json analyze_record(const TimeSeriesRecord& record, const AnalysisOptions& opt, SpectrumResult* spectrum_out) {
  json doc;
  doc["record"] = to_json(record.meta);
  doc["ticks"] = record.size();
  if (opt.fit) {
    json w = {{"transient_skip_tau", opt.window.transient_skip_tau}, {"min_points", opt.window.min_points}};
    if (opt.window.tau_start) w["tau_start"] = *opt.window.tau_start;
    if (opt.window.tau_end) w["tau_end"] = *opt.window.tau_end;
    doc["fit_window_rule"] = w;
    try {
      doc["gap_fit"] = to_json(fit_gap(record, opt.window));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_signal && e.kind() != ErrorKind::domain) throw;
      doc["gap_fit_error"] = error_json(e);
    }
  }
  if (opt.spectrum_t0 && opt.spectrum_periods && !record.field_samples().empty()) {
    try {
      const double period = 2 * constants::pi / std::abs(record.meta.d1);
      const auto series = mean_field_series(record, 0.0);
      auto spec = power_spectrum(series, record.meta.n_tilde, *opt.spectrum_t0, *opt.spectrum_periods, period);
      json js = spectrum_summary(spec);
      try {
        const auto comb = comb_spacing(spec, opt.prominence);
        js["comb_spacing_kappa"] = comb.spacing;
        js["comb_spacing_se"] = comb.standard_error;
        js["peaks"] = comb.peaks.size();
        js["peak_positions_kappa"] = comb.peaks;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_signal) throw;
        js["comb_error"] = error_json(e);
      }
      doc["spectrum"] = js;
      if (spectrum_out) *spectrum_out = std::move(spec);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::io) throw;
      doc["spectrum_error"] = error_json(e);
    }
  }
  return doc;
}

std::pair<double, double> photons_near(const TimeSeriesRecord& record, double tau_star, double half_width) {
  double sum = 0, se = 0;
  int n = 0;
  for (const auto& t : record.ticks()) {
    if (std::abs(TimeSeriesRecord::tau_of(t.t) - tau_star) <= half_width + 1e-12) {
      sum += t.n_total;
      se += t.n_total_se;
      ++n;
    }
  }
  if (n == 0)
    fail(ErrorKind::domain, "record has no ticks within tau* = " + std::to_string(tau_star) + " +- " +
                                std::to_string(half_width));
  return {sum / n, se / n};
}

}  // namespace dks
