#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dks/ensemble.hpp"
#include "dks/fieldops.hpp"
#include "dks/observables.hpp"

namespace dks {

inline constexpr std::uint32_t format_version = 1;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t v);

/// Writes via a temporary file and rename, so readers never see partial artifacts.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

struct FieldInfo {
  bool co_rotating = true;
  std::uint64_t model_hash = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

struct StoredField {
  ModeField field;
  FieldInfo info;
};

void save_field(const std::filesystem::path& path, const ModeField& field, const FieldInfo& info);
/// Refuses files whose model hash differs from `expected_model_hash` when given.
StoredField load_field(const std::filesystem::path& path,
                       std::optional<std::uint64_t> expected_model_hash = {});

void save_record(const std::filesystem::path& path, const TimeSeriesRecord& record);
TimeSeriesRecord load_record(const std::filesystem::path& path);

struct Checkpoint {
  Ensemble ensemble;
  TimeSeriesRecord record;
  std::uint64_t config_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Ensemble& ensemble,
                     const TimeSeriesRecord& record, std::uint64_t config_hash);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Columnar text: scalar observables per tick, with a commented header and units.
std::string record_tsv(const TimeSeriesRecord& record);
/// Long format (t, tau, l, N_l, se) for occupation plots.
std::string occupation_tsv(const TimeSeriesRecord& record);
/// Long format (t, tau, theta, n) for the kept densities; empty header-only if none.
std::string density_tsv(const TimeSeriesRecord& record);

}  // namespace dks
