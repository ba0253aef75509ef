#include "dks/lattice.hpp"

#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "dks/errors.hpp"

namespace dks {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be strictly positive (got " << v << ")";
    fail(ErrorKind::domain, os.str());
  }
}

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) {
    // +0 and -0 hash alike
    if (v == 0) v = 0;
    add(&v, sizeof v);
  }
  void add(std::int64_t v) { add(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// Reads one quantity that may be given in kappa units or SI; both at once is an error.
std::optional<double> read_dual(const nlohmann::json& block, const std::string& kappa_key,
                                const std::string& si_key, std::optional<double> kappa_si) {
  const bool has_k = block.contains(kappa_key);
  const bool has_si = block.contains(si_key);
  if (has_k && has_si)
    fail(ErrorKind::config, "parameter given both as '" + kappa_key + "' and '" + si_key +
                                "'; use one unit system per quantity");
  if (has_k) return block.at(kappa_key).get<double>();
  if (has_si) {
    if (!kappa_si)
      fail(ErrorKind::config, "'" + si_key + "' needs 'kappa_per_s' to convert to kappa units");
    return block.at(si_key).get<double>() / *kappa_si;
  }
  return std::nullopt;
}

void reject_unknown(const nlohmann::json& block, const std::set<std::string>& known,
                    const char* what) {
  for (const auto& [key, _] : block.items())
    if (!known.count(key)) fail(ErrorKind::config, std::string("unknown key '") + key + "' in " + what);
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(radius_m, "radius_m");
  require_positive(a_eff_m2, "a_eff_m2");
  require_positive(quality_factor, "q");
  require_positive(f0_hz, "f0_hz");
  require_positive(n0, "n0");
  require_positive(n2_m2_per_w, "n2_m2_per_w");
  require_positive(p_ext_w, "p_ext_w");
  if (!(eta > 0 && eta <= 1)) fail(ErrorKind::domain, "coupling efficiency eta must lie in (0, 1]");
  if (sigma0_rad_per_s.has_value() == omega_p_rad_per_s.has_value())
    fail(ErrorKind::config, "give exactly one of sigma0_rad_per_s and omega_p_rad_per_s");
  if (modes < 1 || modes % 2 == 0) fail(ErrorKind::domain, "mode count must be odd and positive");
  require_positive(n_tilde, "n_tilde");
}

void ModelParams::validate() const {
  require_positive(kappa, "kappa");
  require_positive(n_tilde, "n_tilde");
  if (modes < 1 || modes % 2 == 0) fail(ErrorKind::domain, "mode count must be odd and positive");
  for (double v : {g, sigma0, d1, d2, drive})
    if (!std::isfinite(v)) fail(ErrorKind::domain, "model parameters must be finite");
  if (g < 0) fail(ErrorKind::domain, "Kerr strength g must be non-negative");
}

void ModelParams::require_anomalous_dispersion() const {
  if (!(d2 > 0))
    fail(ErrorKind::domain, "soliton runs need anomalous dispersion (D2 > 0); got D2 = " +
                                std::to_string(d2));
}

DerivedModel derive_model_params(const PhysicalParams& phys) {
  phys.validate();
  using namespace constants;
  const double omega0 = 2 * pi * phys.f0_hz;
  const double kappa = omega0 / phys.quality_factor;
  const double length = 2 * pi * phys.radius_m;
  const double g = hbar * omega0 * omega0 * speed_of_light * phys.n2_m2_per_w /
                   (phys.n0 * phys.n0 * phys.a_eff_m2 * length);
  const double d1 = speed_of_light / (phys.n0 * phys.radius_m);
  const double d2 = -(speed_of_light / phys.n0) * d1 * d1 * phys.beta2_s2_per_m;
  const double sigma0 =
      phys.sigma0_rad_per_s ? *phys.sigma0_rad_per_s : *phys.omega_p_rad_per_s - omega0;
  const double omega_p = phys.omega_p_rad_per_s ? *phys.omega_p_rad_per_s : omega0 + sigma0;
  require_positive(omega_p, "pump frequency");
  const double drive = std::sqrt(4 * phys.eta * phys.p_ext_w / (hbar * omega_p * kappa));

  DerivedModel out;
  ModelParams& m = out.model;
  m.kappa = 1.0;
  m.g = g / kappa;
  m.sigma0 = sigma0 / kappa;
  m.d1 = d1 / kappa;
  m.d2 = d2 / kappa;
  m.drive = drive;
  m.modes = phys.modes;
  m.n_tilde = phys.n_tilde;
  m.co_rotating = phys.co_rotating;
  m.kappa_per_s = kappa;
  m.omega_p_rad_per_s = omega_p;
  if (phys.beta2_s2_per_m >= 0) {
    out.normal_dispersion = true;
    out.warnings.push_back("beta2 >= 0: normal dispersion, soliton runs will refuse to start");
  }
  return out;
}

double external_power_w(double omega_p_rad_per_s, double kappa_per_s, double drive, double eta) {
  return constants::hbar * omega_p_rad_per_s * kappa_per_s * drive * drive / (4 * eta);
}

std::vector<double> detuning_profile(const ModelParams& model) {
  std::vector<double> sigma(model.modes);
  for (int i = 0; i < model.modes; ++i) {
    const double l = model.mode_at(i);
    double s = model.sigma0 - 0.5 * model.d2 * l * l;
    if (!model.co_rotating) s -= model.d1 * l;
    sigma[i] = s;
  }
  return sigma;
}

double integrated_dispersion(const ModelParams& model, int l) {
  if (std::abs(l) > model.max_mode())
    fail(ErrorKind::index, "mode " + std::to_string(l) + " outside the truncated lattice");
  return 0.5 * model.d2 * double(l) * double(l);
}

Threshold soliton_threshold(const ModelParams& model) {
  if (!(model.g > 0)) fail(ErrorKind::domain, "soliton threshold needs g > 0");
  Threshold t;
  t.drive_threshold = std::sqrt(model.kappa / (2 * model.g));
  t.above = model.drive > t.drive_threshold;
  return t;
}

ModelParams rescale(const ModelParams& model, double n_tilde) {
  require_positive(n_tilde, "n_tilde");
  ModelParams out = model;
  out.g = model.g * n_tilde;
  out.drive = model.drive / std::sqrt(n_tilde);
  out.n_tilde = n_tilde;
  return out;
}

std::uint64_t model_hash(const ModelParams& m) {
  Fnv1a h;
  for (double v : {m.kappa, m.g, m.sigma0, m.d1, m.d2, m.drive}) h.add(v);
  h.add(std::int64_t{m.modes});
  h.add(std::int64_t{m.co_rotating ? 1 : 0});
  return h.value();
}

ModelParams model_from_json(const nlohmann::json& b) {
  reject_unknown(b,
                 {"kappa_per_s", "g_over_kappa", "g_per_s", "sigma0_over_kappa", "sigma0_rad_per_s",
                  "d1_over_kappa", "d1_rad_per_s", "d2_over_kappa", "d2_rad_per_s", "drive_f",
                  "modes", "n_tilde", "co_rotating", "omega_p_rad_per_s"},
                 "model block");
  ModelParams m;
  if (b.contains("kappa_per_s")) m.kappa_per_s = b.at("kappa_per_s").get<double>();
  if (b.contains("omega_p_rad_per_s")) m.omega_p_rad_per_s = b.at("omega_p_rad_per_s").get<double>();
  auto need = [&](const char* k, const char* si) {
    auto v = read_dual(b, k, si, m.kappa_per_s);
    if (!v) fail(ErrorKind::config, std::string("model block lacks '") + k + "'");
    return *v;
  };
  m.g = need("g_over_kappa", "g_per_s");
  m.sigma0 = need("sigma0_over_kappa", "sigma0_rad_per_s");
  m.d1 = need("d1_over_kappa", "d1_rad_per_s");
  m.d2 = need("d2_over_kappa", "d2_rad_per_s");
  if (!b.contains("drive_f")) fail(ErrorKind::config, "model block lacks 'drive_f'");
  m.drive = b.at("drive_f").get<double>();
  m.modes = b.value("modes", 101);
  m.n_tilde = b.value("n_tilde", 1.0);
  m.co_rotating = b.value("co_rotating", true);
  m.validate();
  return m;
}

PhysicalParams physical_from_json(const nlohmann::json& b) {
  reject_unknown(b,
                 {"radius_m", "a_eff_m2", "q", "f0_hz", "n0", "n2_m2_per_w", "beta2_s2_per_m",
                  "sigma0_rad_per_s", "omega_p_rad_per_s", "p_ext_w", "eta", "modes", "n_tilde",
                  "co_rotating"},
                 "physical block");
  PhysicalParams p;
  try {
    p.radius_m = b.at("radius_m").get<double>();
    p.a_eff_m2 = b.at("a_eff_m2").get<double>();
    p.quality_factor = b.at("q").get<double>();
    p.f0_hz = b.at("f0_hz").get<double>();
    p.n0 = b.at("n0").get<double>();
    p.n2_m2_per_w = b.at("n2_m2_per_w").get<double>();
    p.beta2_s2_per_m = b.at("beta2_s2_per_m").get<double>();
    p.p_ext_w = b.at("p_ext_w").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("physical block: ") + e.what());
  }
  if (b.contains("sigma0_rad_per_s")) p.sigma0_rad_per_s = b.at("sigma0_rad_per_s").get<double>();
  if (b.contains("omega_p_rad_per_s")) p.omega_p_rad_per_s = b.at("omega_p_rad_per_s").get<double>();
  p.eta = b.value("eta", 0.5);
  p.modes = b.value("modes", 101);
  p.n_tilde = b.value("n_tilde", 1.0);
  p.co_rotating = b.value("co_rotating", true);
  p.validate();
  return p;
}

nlohmann::json model_to_json(const ModelParams& m) {
  nlohmann::json j;
  j["g_over_kappa"] = m.g;
  j["sigma0_over_kappa"] = m.sigma0;
  j["d1_over_kappa"] = m.d1;
  j["d2_over_kappa"] = m.d2;
  j["drive_f"] = m.drive;
  j["modes"] = m.modes;
  j["n_tilde"] = m.n_tilde;
  j["co_rotating"] = m.co_rotating;
  if (m.kappa_per_s) j["kappa_per_s"] = *m.kappa_per_s;
  if (m.omega_p_rad_per_s) j["omega_p_rad_per_s"] = *m.omega_p_rad_per_s;
  return j;
}

ModelParams baseline_model(int modes) {
  ModelParams m;
  m.g = 3.05e-9;
  m.sigma0 = -1.024;
  m.d1 = 1.8587e3;
  m.d2 = 2.02e-2;
  m.drive = 1.8e4;
  m.modes = modes;
  m.n_tilde = 1.0;
  m.co_rotating = true;
  return m;
}

}  // namespace dks
