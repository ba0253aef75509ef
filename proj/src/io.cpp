#include "dks/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "dks/errors.hpp"

namespace dks {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

constexpr char magic[4] = {'D', 'K', 'S', '1'};
enum class FileKind : std::uint32_t { field = 1, record = 2, checkpoint = 3 };

class Writer {
 public:
  explicit Writer(FileKind kind) {
    buf_.append(magic, 4);
    put(static_cast<std::uint32_t>(kind));
    put(format_version);
  }
  template <class T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put(const std::string& s) {
    put(static_cast<std::uint64_t>(s.size()));
    buf_.append(s);
  }
  template <class T>
  void put_vector(const std::vector<T>& v) {
    put(static_cast<std::uint64_t>(v.size()));
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  std::string finish() {
    put(fnv1a64(buf_));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, FileKind kind, const std::string& name) : data_(std::move(data)), name_(name) {
    if (data_.size() < 20 || std::memcmp(data_.data(), magic, 4) != 0)
      fail(ErrorKind::io, name_ + ": not a dks binary file (bad magic)");
    std::uint64_t stored;
    std::memcpy(&stored, data_.data() + data_.size() - 8, 8);
    if (stored != fnv1a64(std::string_view(data_).substr(0, data_.size() - 8)))
      fail(ErrorKind::io, name_ + ": checksum mismatch (file corrupted or truncated)");
    end_ = data_.size() - 8;
    pos_ = 4;
    if (get<std::uint32_t>() != static_cast<std::uint32_t>(kind))
      fail(ErrorKind::io, name_ + ": wrong file kind");
    const auto version = get<std::uint32_t>();
    if (version != format_version)
      fail(ErrorKind::io, name_ + ": format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(format_version) + ")");
  }
  template <class T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (end_ - pos_) / sizeof(T)) fail(ErrorKind::io, name_ + ": vector length exceeds file size");
    std::vector<T> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  void done() const {
    if (pos_ != end_) fail(ErrorKind::io, name_ + ": trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) fail(ErrorKind::io, name_ + ": truncated payload");
  }
  std::string data_;
  std::string name_;
  std::size_t pos_ = 0, end_ = 0;
};

void put_record(Writer& w, const TimeSeriesRecord& r) {
  const auto& m = r.meta;
  w.put(m.kind);
  w.put(static_cast<std::int32_t>(m.modes));
  w.put(static_cast<std::int32_t>(m.grid));
  w.put(m.n_tilde);
  w.put(static_cast<std::uint8_t>(m.co_rotating));
  w.put(m.d1);
  w.put(m.dt);
  w.put(m.model_hash);
  w.put(m.config_hash);
  w.put(m.seed);
  w.put(m.n_traj);
  w.put(static_cast<std::uint8_t>(m.vacuum_subtracted));
  w.put(m.version);
  w.put(static_cast<std::uint64_t>(r.size()));
  for (const auto& t : r.ticks()) {
    w.put(t.t);
    w.put_vector(t.occupation);
    w.put_vector(t.occupation_se);
    w.put(t.n_total);
    w.put(t.n_total_se);
    w.put(t.contrast);
    w.put(t.contrast_se);
    w.put(t.mean_field0);
    w.put(t.mean_field0_se);
    w.put_vector(t.mean_modes);
    w.put_vector(t.density);
  }
  w.put(static_cast<std::uint64_t>(r.field_samples().size()));
  for (const auto& s : r.field_samples()) {
    w.put(s.t);
    w.put_vector(s.mean_modes);
  }
}

TimeSeriesRecord get_record(Reader& rd) {
  TimeSeriesRecord r;
  auto& m = r.meta;
  m.kind = rd.get_string();
  m.modes = rd.get<std::int32_t>();
  m.grid = rd.get<std::int32_t>();
  m.n_tilde = rd.get<double>();
  m.co_rotating = rd.get<std::uint8_t>() != 0;
  m.d1 = rd.get<double>();
  m.dt = rd.get<double>();
  m.model_hash = rd.get<std::uint64_t>();
  m.config_hash = rd.get<std::uint64_t>();
  m.seed = rd.get<std::uint64_t>();
  m.n_traj = rd.get<std::int64_t>();
  m.vacuum_subtracted = rd.get<std::uint8_t>() != 0;
  m.version = rd.get_string();
  const auto ticks = rd.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < ticks; ++i) {
    Tick t;
    t.t = rd.get<double>();
    t.occupation = rd.get_vector<double>();
    t.occupation_se = rd.get_vector<double>();
    t.n_total = rd.get<double>();
    t.n_total_se = rd.get<double>();
    t.contrast = rd.get<double>();
    t.contrast_se = rd.get<double>();
    t.mean_field0 = rd.get<Complex>();
    t.mean_field0_se = rd.get<double>();
    t.mean_modes = rd.get_vector<Complex>();
    t.density = rd.get_vector<double>();
    r.push(std::move(t));
  }
  const auto samples = rd.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < samples; ++i) {
    FieldSample s;
    s.t = rd.get<double>();
    s.mean_modes = rd.get_vector<Complex>();
    r.push_field(std::move(s));
  }
  return r;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string header_block(const TimeSeriesRecord& r) {
  const auto& m = r.meta;
  std::ostringstream os;
  os << "# dks " << m.kind << " record, code version " << m.version << "\n"
     << "# model_hash " << hex64(m.model_hash) << "\n"
     << "# config_hash " << hex64(m.config_hash) << "\n"
     << "# seed " << m.seed << "\n"
     << "# n_tilde " << num(m.n_tilde) << "\n"
     << "# modes " << m.modes << "\n"
     << "# n_traj " << m.n_traj << "\n"
     << "# dt " << num(m.dt) << " [1/kappa]\n"
     << "# vacuum_subtracted " << (m.vacuum_subtracted ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016" PRIx64, v);
  return b;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void save_field(const std::filesystem::path& path, const ModeField& field, const FieldInfo& info) {
  Writer w(FileKind::field);
  w.put(static_cast<std::int32_t>(field.modes()));
  w.put(static_cast<std::uint8_t>(info.co_rotating));
  w.put(info.model_hash);
  w.put(info.config_hash);
  w.put(info.seed);
  w.put(field.time);
  w.put_vector(field.amplitudes);
  write_file_atomic(path, w.finish());
}

StoredField load_field(const std::filesystem::path& path, std::optional<std::uint64_t> expected) {
  Reader rd(read_file(path), FileKind::field, path.string());
  StoredField s;
  const auto modes = rd.get<std::int32_t>();
  s.info.co_rotating = rd.get<std::uint8_t>() != 0;
  s.info.model_hash = rd.get<std::uint64_t>();
  s.info.config_hash = rd.get<std::uint64_t>();
  s.info.seed = rd.get<std::uint64_t>();
  s.field.time = rd.get<double>();
  s.field.amplitudes = rd.get_vector<Complex>();
  rd.done();
  if (static_cast<int>(s.field.amplitudes.size()) != modes)
    fail(ErrorKind::io, path.string() + ": mode count does not match the stored amplitudes");
  if (expected && *expected != s.info.model_hash)
    fail(ErrorKind::io, path.string() + ": model hash " + hex64(s.info.model_hash) +
                            " does not match the configured model " + hex64(*expected));
  return s;
}

void save_record(const std::filesystem::path& path, const TimeSeriesRecord& record) {
  Writer w(FileKind::record);
  put_record(w, record);
  write_file_atomic(path, w.finish());
}

TimeSeriesRecord load_record(const std::filesystem::path& path) {
  Reader rd(read_file(path), FileKind::record, path.string());
  auto r = get_record(rd);
  rd.done();
  return r;
}

void save_checkpoint(const std::filesystem::path& path, const Ensemble& ens, const TimeSeriesRecord& record,
                     std::uint64_t config_hash) {
  Writer w(FileKind::checkpoint);
  w.put(config_hash);
  w.put(ens.model_hash);
  w.put(ens.master_seed);
  w.put(ens.n_tilde);
  w.put(ens.step);
  w.put(ens.time);
  w.put(static_cast<std::int32_t>(ens.size()));
  w.put(static_cast<std::int32_t>(ens.modes()));
  for (const auto& f : ens.trajectories) w.put_vector(f.amplitudes);
  put_record(w, record);
  write_file_atomic(path, w.finish());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader rd(read_file(path), FileKind::checkpoint, path.string());
  Checkpoint c;
  c.config_hash = rd.get<std::uint64_t>();
  auto& e = c.ensemble;
  e.model_hash = rd.get<std::uint64_t>();
  e.master_seed = rd.get<std::uint64_t>();
  e.n_tilde = rd.get<double>();
  e.step = rd.get<std::int64_t>();
  e.time = rd.get<double>();
  const auto n = rd.get<std::int32_t>();
  const auto modes = rd.get<std::int32_t>();
  if (n < 2 || modes < 1) fail(ErrorKind::io, path.string() + ": invalid ensemble dimensions");
  e.trajectories.resize(n);
  for (auto& f : e.trajectories) {
    f.amplitudes = rd.get_vector<Complex>();
    f.time = e.time;
    if (static_cast<int>(f.amplitudes.size()) != modes)
      fail(ErrorKind::io, path.string() + ": trajectory length mismatch");
  }
  c.record = get_record(rd);
  rd.done();
  return c;
}

std::string record_tsv(const TimeSeriesRecord& r) {
  std::ostringstream os;
  os << header_block(r)
     << "# columns: t[1/kappa] tau[kappa*t/2] contrast[1] contrast_se[1] n_total[photons] "
        "n_total_se[photons] re_psi0[rescaled] im_psi0[rescaled] psi0_se[rescaled]\n"
     << "t\ttau\tcontrast\tcontrast_se\tn_total\tn_total_se\tre_psi0\tim_psi0\tpsi0_se\n";
  for (const auto& t : r.ticks())
    os << num(t.t) << '\t' << num(TimeSeriesRecord::tau_of(t.t)) << '\t' << num(t.contrast) << '\t'
       << num(t.contrast_se) << '\t' << num(t.n_total) << '\t' << num(t.n_total_se) << '\t'
       << num(t.mean_field0.real()) << '\t' << num(t.mean_field0.imag()) << '\t' << num(t.mean_field0_se)
       << '\n';
  return os.str();
}

std::string occupation_tsv(const TimeSeriesRecord& r) {
  std::ostringstream os;
  os << header_block(r) << "# columns: t[1/kappa] tau[kappa*t/2] l[1] N_l[photons] N_l_se[photons]\n"
     << "t\ttau\tl\tN_l\tN_l_se\n";
  const int lmax = (r.meta.modes - 1) / 2;
  for (const auto& t : r.ticks())
    for (std::size_t i = 0; i < t.occupation.size(); ++i)
      os << num(t.t) << '\t' << num(TimeSeriesRecord::tau_of(t.t)) << '\t' << static_cast<int>(i) - lmax << '\t'
         << num(t.occupation[i]) << '\t' << num(i < t.occupation_se.size() ? t.occupation_se[i] : 0.0) << '\n';
  return os.str();
}

std::string density_tsv(const TimeSeriesRecord& r) {
  std::ostringstream os;
  os << header_block(r) << "# columns: t[1/kappa] tau[kappa*t/2] theta[rad] n[photons/rad]\n"
     << "t\ttau\ttheta\tn\n";
  for (const auto& t : r.ticks()) {
    const auto g = t.density.size();
    for (std::size_t j = 0; j < g; ++j)
      os << num(t.t) << '\t' << num(TimeSeriesRecord::tau_of(t.t)) << '\t'
         << num(2 * constants::pi * static_cast<double>(j) / static_cast<double>(g)) << '\t' << num(t.density[j])
         << '\n';
  }
  return os.str();
}

}  // namespace dks
