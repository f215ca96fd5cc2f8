#pragma once

// Text formats. CSV: '.' decimal separator, '\n' line endings, mandatory
// header row; tuples inside a cell are ';'-separated. Doubles are written
// with 17 significant digits so reruns compare byte for byte.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "manifold/gff.hpp"
#include "manifold/local_time.hpp"
#include "manifold/mcmc.hpp"

namespace manifold {

std::string format_double(double v);

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Writes `contents` to `path` via a temporary file and rename.
void atomic_write(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// mode,k_tuple,lambda for every mode including the constant one.
void write_spectrum_csv(std::ostream& os, const Spectrum1D<double>& spec, const LatticeShape& shape);

/// site_index,x_1..x_d,u_1..u_D
void write_field_csv(std::ostream& os, const FieldConfiguration<double>& field, const LatticeShape& shape);

struct FieldFile {
  LatticeShape shape{1, 1};
  FieldConfiguration<double> field;
};

/// Inverse of write_field_csv; d and D come from the header, N from the row
/// count. Throws UsageError on malformed input.
FieldFile read_field_csv(std::istream& is);

/// z_tuple,count
void write_histogram_csv(std::ostream& os, const LocalTimeHistogram& hist);

/// sweep,energy,radius,accept_site,accept_global[,observer columns]
void write_trace_csv(std::ostream& os, const Trace& trace);

nlohmann::json schedule_to_json(const McmcSchedule& schedule);
McmcSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& params);
nlohmann::json summary_to_json(const SeriesSummary& s);
nlohmann::json diagnostics_to_json(const ChainDiagnostics& d);

/// Sidecar for a trace file: params, schedule, seed, diagnostics.
nlohmann::json trace_sidecar(const Trace& trace, const ModelParams& params, const McmcSchedule& schedule);

}  // namespace manifold
