#include "run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "dks/errors.hpp"
#include "dks/io.hpp"

namespace dks::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed.
class Block {
 public:
  Block(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorKind::config, "'" + name_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::config, name_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return opt<T>(key).value_or(fallback);
  }

  const json& sub(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(ErrorKind::config, "unknown key '" + name_ + "." + it.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

double positive(double v, const std::string& what) {
  if (!(v > 0) || !std::isfinite(v)) fail(ErrorKind::config, what + " must be positive");
  return v;
}

SpectrumRequest parse_spectrum(const json& j, const std::string& name) {
  Block b(j, name);
  SpectrumRequest s;
  s.t0 = b.get("t0_inv_kappa", s.t0);
  s.periods = positive(b.get("periods", s.periods), name + ".periods");
  s.samples_per_period = b.get("samples_per_period", s.samples_per_period);
  if (s.samples_per_period < 2) fail(ErrorKind::config, name + ".samples_per_period must be >= 2");
  b.finish();
  return s;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }
void write_json(const fs::path& path, const json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

json provenance(const RunConfig& c) {
  return {{"config_hash", hex64(c.hash)}, {"code_version", code_version}, {"seed", c.seed}};
}

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::io, "cannot create output directory " + dir.string());
}

ModeField obtain_soliton(const RunConfig& c, TimeSeriesRecord* convergence = nullptr) {
  const auto hash = model_hash(c.model);
  if (c.twa.soliton_file) return load_field(*c.twa.soliton_file, hash).field;
  SolitonOptions so;
  so.gp.dt = c.gp.dt;
  so.gp.grid = c.twa.grid;
  so.t_relax = c.gp.t_relax;
  so.window = c.gp.window;
  so.tol = c.gp.tolerance;
  SeedSpec seed;
  seed.width = c.gp.seed_width;
  auto field = prepare_soliton(c.model, seed, so, convergence);
  save_field(c.output_dir / "soliton.dksf", field, {c.model.co_rotating, hash, c.hash, c.seed});
  return field;
}

void save_record_set(const fs::path& dir, const std::string& stem, const TimeSeriesRecord& r) {
  save_record(dir / (stem + ".dksr"), r);
  write_text(dir / (stem + ".tsv"), record_tsv(r));
  write_text(dir / (stem + "_occupation.tsv"), occupation_tsv(r));
  if (!r.empty() && !r.ticks().front().density.empty())
    write_text(dir / (stem + "_density.tsv"), density_tsv(r));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

fs::path output_root() {
  if (const char* env = std::getenv(output_root_env); env && *env) return fs::path(env);
  return fs::current_path();
}

RunConfig parse_config(const json& doc, const Overrides& ov, const fs::path& base_dir) {
  Block top(doc, "config");
  RunConfig c;

  const bool has_model = top.has("model"), has_physical = top.has("physical");
  if (has_model == has_physical)
    fail(ErrorKind::config, "exactly one of the 'model' and 'physical' blocks must be present");
  if (has_model) {
    c.model = model_from_json(top.sub("model"));
  } else {
    auto derived = derive_model_params(physical_from_json(top.sub("physical")));
    c.model = derived.model;
    c.model_warnings = derived.warnings;
    c.from_physical = true;
  }

  c.seed = top.get<std::uint64_t>("seed", 1);
  c.workers = top.get("workers", 1);
  if (ov.seed) c.seed = *ov.seed;
  if (ov.workers) c.workers = *ov.workers;
  if (c.workers < 1) fail(ErrorKind::config, "workers must be >= 1");
  const auto out = top.opt<std::string>("output_dir");
  c.output_dir = out ? fs::path(*out) : fs::path("dks_out");
  if (c.output_dir.is_relative()) c.output_dir = output_root() / c.output_dir;

  if (top.has("gp")) {
    Block b(top.sub("gp"), "gp");
    c.gp.dt = positive(b.get("dt_inv_kappa", c.gp.dt), "gp.dt_inv_kappa");
    c.gp.t_relax = positive(b.get("t_relax_inv_kappa", c.gp.t_relax), "gp.t_relax_inv_kappa");
    c.gp.cadence = positive(b.get("cadence_inv_kappa", c.gp.cadence), "gp.cadence_inv_kappa");
    c.gp.window = positive(b.get("window_inv_kappa", c.gp.window), "gp.window_inv_kappa");
    c.gp.tolerance = positive(b.get("tolerance", c.gp.tolerance), "gp.tolerance");
    c.gp.seed_width = b.get("seed_width_rad", c.gp.seed_width);
    c.gp.allow_below_threshold = b.get("allow_below_threshold", false);
    if (b.has("spectrum")) c.gp.spectrum = parse_spectrum(b.sub("spectrum"), "gp.spectrum");
    b.finish();
  }

  if (top.has("twa")) {
    Block b(top.sub("twa"), "twa");
    c.twa.n_tilde = b.opt<double>("n_tilde");
    if (c.twa.n_tilde) positive(*c.twa.n_tilde, "twa.n_tilde");
    c.twa.n_traj = b.get("n_traj", c.twa.n_traj);
    if (c.twa.n_traj < 2) fail(ErrorKind::config, "twa.n_traj must be >= 2");
    c.twa.dt = positive(b.get("dt_inv_kappa", c.twa.dt), "twa.dt_inv_kappa");
    c.twa.cadence = positive(b.get("cadence_inv_kappa", c.twa.cadence), "twa.cadence_inv_kappa");
    const auto t_end = b.opt<double>("t_end_inv_kappa");
    const auto tau_end = b.opt<double>("tau_end");
    if (t_end && tau_end) fail(ErrorKind::config, "give either twa.t_end_inv_kappa or twa.tau_end, not both");
    if (t_end) c.twa.t_end = positive(*t_end, "twa.t_end_inv_kappa");
    if (tau_end) c.twa.t_end = 2 * positive(*tau_end, "twa.tau_end");
    c.twa.checkpoint_every = b.get("checkpoint_every_inv_kappa", 0.0);
    c.twa.keep_density = b.get("keep_density", false);
    c.twa.grid = b.get("grid", c.twa.grid);
    c.twa.field_cadence = b.get("field_cadence_inv_kappa", 0.0);
    c.twa.field_start = b.get("field_start_inv_kappa", 0.0);
    c.twa.noise = b.get("noise", true);
    if (auto p = b.opt<std::string>("soliton_file")) {
      fs::path sp(*p);
      c.twa.soliton_file = sp.is_relative() ? base_dir / sp : sp;
    }
    c.twa.halt_after_checkpoints = b.get("halt_after_checkpoints", 0);
    b.finish();
  }

  if (top.has("sweep")) {
    Block b(top.sub("sweep"), "sweep");
    SweepSection s;
    s.n_tilde = b.get("n_tilde", std::vector<double>{});
    s.tau_star = b.get("tau_star", s.tau_star);
    s.tau_star_half_width = b.get("tau_star_half_width", s.tau_star_half_width);
    b.finish();
    c.sweep = s;
  }

  if (top.has("analysis")) {
    Block b(top.sub("analysis"), "analysis");
    auto& w = c.analysis.window;
    w.transient_skip_tau = b.get("transient_skip_tau", w.transient_skip_tau);
    w.tau_start = b.opt<double>("tau_start");
    w.tau_end = b.opt<double>("tau_end");
    w.min_points = b.get("min_points", w.min_points);
    c.analysis.prominence = b.get("prominence", c.analysis.prominence);
    if (b.has("spectrum")) {
      const auto s = parse_spectrum(b.sub("spectrum"), "analysis.spectrum");
      c.analysis.spectrum_t0 = s.t0;
      c.analysis.spectrum_periods = s.periods;
    }
    b.finish();
  }

  for (const auto& r : top.get("records", std::vector<std::string>{})) {
    fs::path p(r);
    c.records.push_back(p.is_relative() ? base_dir / p : p);
  }
  top.finish();

  json canonical = doc;
  canonical.erase("workers");
  canonical.erase("output_dir");
  if (canonical.contains("twa") && canonical["twa"].is_object()) canonical["twa"].erase("halt_after_checkpoints");
  canonical["seed"] = c.seed;
  c.hash = fnv1a64(canonical.dump());
  return c;
}

RunConfig load_config(const fs::path& path, const Overrides& ov) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("config: ") + e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, path.string() + ": " + e.what());
  }
  return parse_config(doc, ov, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

int run_gp(const RunConfig& c) {
  prepare_output(c.output_dir);
  const auto hash = model_hash(c.model);
  const auto thr = soliton_threshold(c.model);
  for (const auto& w : c.model_warnings) std::cerr << "warning: " << w << "\n";

  TimeSeriesRecord convergence;
  ModeField field;
  if (!thr.above && c.gp.allow_below_threshold) {
    GpOptions o;
    o.dt = c.gp.dt;
    auto run = evolve_gp(sech_seed(c.model, c.gp.seed_width), c.model, c.gp.t_relax, c.gp.cadence, o);
    field = run.field;
    field.time = 0;
    convergence = std::move(run.record);
  } else {
    TwaSection none;
    RunConfig local = c;
    local.twa = none;
    local.twa.grid = default_grid;
    field = obtain_soliton(local, &convergence);
  }
  save_field(c.output_dir / "soliton.dksf", field, {c.model.co_rotating, hash, c.hash, c.seed});
  convergence.meta.config_hash = c.hash;
  convergence.meta.seed = c.seed;
  save_record_set(c.output_dir, "gp_record", convergence);

  const Tick final_tick = observe_field(field, default_grid, true);
  TimeSeriesRecord profile;
  profile.meta = convergence.meta;
  profile.push(final_tick);
  write_text(c.output_dir / "soliton_density.tsv", density_tsv(profile));

  double sum_abs2 = field.norm2();
  json summary = provenance(c);
  summary["model"] = model_to_json(c.model);
  summary["model_hash"] = hex64(hash);
  summary["threshold"] = {{"drive_threshold", thr.drive_threshold}, {"above", thr.above}};
  summary["contrast"] = final_tick.contrast;
  summary["sum_abs2"] = sum_abs2;
  summary["n_total"] = c.model.n_tilde * sum_abs2;
  summary["warnings"] = c.model_warnings;

  if (c.gp.spectrum) {
    const auto& s = *c.gp.spectrum;
    const double period = 2 * constants::pi / std::abs(c.model.d1);
    GpOptions o;
    o.dt = period / s.samples_per_period;
    o.field_cadence = o.dt;
    o.field_start = s.t0;
    o.max_halvings = 0;
    const double t_end = s.t0 + s.periods * period + 0.5 * o.dt;
    const double cadence = o.dt * std::max(1.0, std::round(c.gp.cadence / o.dt));
    auto run = evolve_gp(field, c.model, t_end, cadence, o);
    run.record.meta.config_hash = c.hash;
    run.record.meta.seed = c.seed;
    save_record(c.output_dir / "spectrum_record.dksr", run.record);
    AnalysisOptions ao = c.analysis;
    ao.fit = false;
    ao.spectrum_t0 = s.t0;
    ao.spectrum_periods = s.periods;
    SpectrumResult spec;
    json doc = analyze_record(run.record, ao, &spec);
    doc["provenance"] = provenance(c);
    write_json(c.output_dir / "spectrum.json", doc);
    if (!spec.omega.empty()) write_text(c.output_dir / "spectrum.tsv", spectrum_tsv(spec));
    summary["spectrum"] = doc.value("spectrum", json(nullptr));
  }
  write_json(c.output_dir / "gp_summary.json", summary);

  std::cout << "gp: soliton contrast " << fmt(final_tick.contrast) << ", sum|alpha|^2 " << fmt(sum_abs2)
            << " (F/F_thr = " << fmt(c.model.drive / thr.drive_threshold) << ") -> "
            << (c.output_dir / "soliton.dksf").string() << "\n";
  return 0;
}

int run_twa(const RunConfig& c, const std::optional<fs::path>& resume) {
  prepare_output(c.output_dir);
  const auto hash = model_hash(c.model);
  Ensemble ens;
  TimeSeriesRecord rec;
  if (resume) {
    auto ck = load_checkpoint(*resume);
    if (ck.config_hash != c.hash)
      fail(ErrorKind::io, resume->string() + ": checkpoint was written by a different config (hash " +
                              hex64(ck.config_hash) + ", current " + hex64(c.hash) + ")");
    if (ck.ensemble.model_hash != hash) fail(ErrorKind::io, resume->string() + ": model hash mismatch");
    ens = std::move(ck.ensemble);
    rec = std::move(ck.record);
  } else {
    const auto soliton = obtain_soliton(c);
    const double n_tilde = c.twa.n_tilde.value_or(c.model.n_tilde);
    ens = sample_initial(soliton, n_tilde, c.twa.n_traj, NoisePolicy(c.seed), hash);
    rec.meta.config_hash = c.hash;
  }

  int checkpoints = 0;
  const auto ckpt_path = c.output_dir / "checkpoint.dksc";
  TwaOptions o;
  o.dt = c.twa.dt;
  o.workers = c.workers;
  o.grid = c.twa.grid;
  o.keep_density = c.twa.keep_density;
  o.noise = c.twa.noise;
  o.field_cadence = c.twa.field_cadence;
  o.field_start = c.twa.field_start;
  o.checkpoint_every = c.twa.checkpoint_every;
  o.on_checkpoint = [&](const Ensemble& e, const TimeSeriesRecord& r) {
    save_checkpoint(ckpt_path, e, r, c.hash);
    ++checkpoints;
    return resume || !(c.twa.halt_after_checkpoints > 0 && checkpoints >= c.twa.halt_after_checkpoints);
  };

  const bool complete = evolve_twa(ens, c.model, c.twa.t_end, c.twa.cadence, rec, o);
  if (!complete) {
    std::cout << "twa: halted at t = " << fmt(ens.time) << " after " << checkpoints
              << " checkpoint(s); resume with --resume " << ckpt_path.string() << "\n";
    return 0;
  }
  save_checkpoint(ckpt_path, ens, rec, c.hash);
  save_record_set(c.output_dir, "twa_record", rec);
  SpectrumResult spec;
  json doc = analyze_record(rec, c.analysis, &spec);
  write_json(c.output_dir / "twa_analysis.json", doc);
  if (!spec.omega.empty()) write_text(c.output_dir / "twa_spectrum.tsv", spectrum_tsv(spec));

  const auto& last = rec.ticks().back();
  std::cout << "twa: N~ = " << fmt(ens.n_tilde) << ", " << ens.size() << " trajectories to t = " << fmt(ens.time)
            << ", final contrast " << fmt(last.contrast) << " +- " << fmt(last.contrast_se) << ", N_tot "
            << fmt(last.n_total);
  if (doc.contains("gap_fit")) std::cout << ", Lambda = " << fmt(doc["gap_fit"]["lambda_over_kappa"].get<double>());
  std::cout << "\n";
  return 0;
}

int run_sweep(const RunConfig& c) {
  if (!c.sweep || c.sweep->n_tilde.empty()) fail(ErrorKind::config, "sweep.n_tilde must be a non-empty list");
  const auto& list = c.sweep->n_tilde;
  for (double v : list) positive(v, "sweep.n_tilde entries");
  const auto [mn, mx] = std::minmax_element(list.begin(), list.end());
  if (list.size() < 3 || *mx / *mn < 10 * (1 - 1e-12))
    fail(ErrorKind::config, "sweep.n_tilde needs at least 3 values spanning at least one decade");

  prepare_output(c.output_dir);
  const auto hash = model_hash(c.model);
  const auto soliton = obtain_soliton(c);

  json points = json::array();
  std::vector<double> fx, fy, fse, nx;
  std::ostringstream table;
  table << "# dks gap table, code version " << code_version << ", config_hash " << hex64(c.hash) << ", seed "
        << c.seed << "\n"
        << "# columns: n_tilde[1] lambda[kappa] lambda_se[kappa] lambda_ci95[kappa] amplitude[1] tau_a tau_b "
           "n_total_tau_star[photons] n_total_se[photons] status\n"
        << "n_tilde\tlambda\tlambda_se\tlambda_ci95\tamplitude\ttau_a\ttau_b\tn_total\tn_total_se\tstatus\n";
  table.precision(17);

  for (std::size_t i = 0; i < list.size(); ++i) {
    const double n_tilde = list[i];
    auto ens = sample_initial(soliton, n_tilde, c.twa.n_traj, NoisePolicy(c.seed), hash);
    TimeSeriesRecord rec;
    rec.meta.config_hash = c.hash;
    TwaOptions o;
    o.dt = c.twa.dt;
    o.workers = c.workers;
    o.grid = c.twa.grid;
    o.keep_density = c.twa.keep_density;
    o.noise = c.twa.noise;
    evolve_twa(ens, c.model, c.twa.t_end, c.twa.cadence, rec, o);
    const std::string stem = "point_" + std::to_string(i);
    save_record_set(c.output_dir, stem, rec);
    json doc = analyze_record(rec, c.analysis);
    write_json(c.output_dir / (stem + "_analysis.json"), doc);

    json p = {{"n_tilde", n_tilde}, {"record", stem + ".dksr"}};
    double nt = 0, nt_se = 0;
    try {
      std::tie(nt, nt_se) = photons_near(rec, c.sweep->tau_star, c.sweep->tau_star_half_width);
      p["n_total_tau_star"] = nt;
      p["n_total_se"] = nt_se;
    } catch (const Error& e) {
      p["n_total_error"] = e.what();
    }
    table << n_tilde << '\t';
    if (doc.contains("gap_fit")) {
      const auto& f = doc["gap_fit"];
      p["gap_fit"] = f;
      p["status"] = f["warning"].is_null() ? "ok" : "poor_fit";
      fx.push_back(n_tilde);
      fy.push_back(f["lambda_over_kappa"].get<double>());
      fse.push_back(f["lambda_se"].get<double>());
      nx.push_back(nt);
      table << f["lambda_over_kappa"].get<double>() << '\t' << f["lambda_se"].get<double>() << '\t'
            << f["lambda_ci95"].get<double>() << '\t' << f["amplitude"].get<double>() << '\t'
            << f["tau_window"][0].get<double>() << '\t' << f["tau_window"][1].get<double>() << '\t';
    } else {
      p["gap_fit_error"] = doc["gap_fit_error"];
      p["status"] = "no_signal";
      table << "nan\tnan\tnan\tnan\tnan\tnan\t";
    }
    table << nt << '\t' << nt_se << '\t' << p["status"].get<std::string>() << '\n';
    points.push_back(p);
    std::cout << "sweep: N~ = " << fmt(n_tilde) << " -> " << p["status"].get<std::string>();
    if (p.contains("gap_fit")) std::cout << ", Lambda = " << fmt(fy.back()) << " +- " << fmt(fse.back());
    std::cout << ", N_tot(tau*) = " << fmt(nt) << "\n";
  }

  json doc = provenance(c);
  doc["model_hash"] = hex64(hash);
  doc["tau_star"] = c.sweep->tau_star;
  doc["points"] = points;
  auto law = [&](const std::vector<double>& x, const char* key) {
    try {
      const auto pl = power_law_fit(x, fy, fse);
      doc[key] = to_json(pl);
      std::cout << "sweep: " << key << " exponent " << fmt(pl.a) << " +- " << fmt(pl.a_ci) << " (95%)\n";
    } catch (const Error& e) {
      doc[key] = {{"error", e.what()}};
    }
  };
  law(fx, "power_law_vs_n_tilde");
  bool totals_ok = std::all_of(nx.begin(), nx.end(), [](double v) { return v > 0; });
  if (totals_ok) law(nx, "power_law_vs_n_total");
  write_json(c.output_dir / "sweep.json", doc);
  write_text(c.output_dir / "gap_table.tsv", table.str());
  return 0;
}

int run_analyze(const RunConfig& c) {
  if (c.records.empty()) fail(ErrorKind::config, "analyze needs a non-empty 'records' list");
  prepare_output(c.output_dir);
  std::vector<double> x, y, se;
  for (const auto& path : c.records) {
    const auto rec = load_record(path);
    SpectrumResult spec;
    AnalysisOptions ao = c.analysis;
    ao.fit = rec.meta.kind == "twa";
    json doc = analyze_record(rec, ao, &spec);
    const auto stem = path.stem().string();
    write_json(c.output_dir / ("analysis_" + stem + ".json"), doc);
    if (!spec.omega.empty()) write_text(c.output_dir / ("spectrum_" + stem + ".tsv"), spectrum_tsv(spec));
    std::cout << "analyze: " << path.string();
    if (doc.contains("gap_fit")) {
      x.push_back(rec.meta.n_tilde);
      y.push_back(doc["gap_fit"]["lambda_over_kappa"].get<double>());
      se.push_back(doc["gap_fit"]["lambda_se"].get<double>());
      std::cout << " Lambda = " << fmt(y.back());
    }
    if (doc.contains("spectrum") && doc["spectrum"].contains("comb_spacing_kappa"))
      std::cout << " comb spacing = " << fmt(doc["spectrum"]["comb_spacing_kappa"].get<double>());
    std::cout << "\n";
  }
  if (x.size() >= 3) {
    json summary = provenance(c);
    try {
      summary["power_law_vs_n_tilde"] = to_json(power_law_fit(x, y, se));
    } catch (const Error& e) {
      summary["power_law_vs_n_tilde"] = {{"error", e.what()}};
    }
    write_json(c.output_dir / "analysis_summary.json", summary);
  }
  return 0;
}

}  // namespace dks::cli
