#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "dks/analysis.hpp"
#include "dks/observables.hpp"

namespace dks {

struct AnalysisOptions {
  FitWindow window;
  bool fit = true;
  /// Spectrum of the dense mean-field samples, if the record has them.
  std::optional<double> spectrum_t0;
  std::optional<double> spectrum_periods;
  double prominence = 10;
};

nlohmann::json to_json(const GapFit& fit);
nlohmann::json to_json(const PowerLaw& law);
nlohmann::json to_json(const RecordMeta& meta);
nlohmann::json spectrum_summary(const SpectrumResult& spectrum);
std::string spectrum_tsv(const SpectrumResult& spectrum);

/// One analysis document per record. The same function backs the inline analysis
/// of `simulate twa` and `simulate analyze`, so the two agree exactly.
nlohmann::json analyze_record(const TimeSeriesRecord& record, const AnalysisOptions& options,
                              SpectrumResult* spectrum_out = nullptr);

/// Mean of N_tot over ticks with |tau - tau_star| <= half_width; the error is the
/// mean per-tick standard error (ticks are correlated, so no 1/sqrt(n) gain).
std::pair<double, double> photons_near(const TimeSeriesRecord& record, double tau_star, double half_width);

}  // namespace dks
