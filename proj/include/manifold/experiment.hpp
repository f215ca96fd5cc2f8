#pragma once

// Scaling sweeps: one seeded chain per (N, replica), ESS-weighted aggregation
// of the effective radius per N, and a log-log exponent fit.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "manifold/mcmc.hpp"
#include "manifold/observables.hpp"

namespace manifold {

inline constexpr const char* kVersion = "manifold_mc 0.1.0";

struct ExperimentConfig {
  std::vector<int> n_values{4, 6, 8, 12, 16};
  int d = 2;
  int range_dim = 1;
  double beta = 1.0;
  double gamma = 1.0;
  McmcSchedule schedule;
  int replicas = 4;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  double rho = 0.0;
  double min_ess = 50.0;  // chains below this radius ESS are excluded

  /// Throws UsageError on < 3 N values, < 2 replicas or invalid model/schedule.
  void validate() const;
  ModelParams model_params(int n) const;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Rejects unknown keys at every level.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Seed of chain (N, replica); independent of how many replicas exist.
std::uint64_t replica_seed(std::uint64_t master, int n, int replica);

struct RunRecord {
  int n = 0;
  int replica = 0;
  std::uint64_t seed = 0;
  std::string trace_file;  // relative to the output directory
  std::string trace_hash;  // FNV-1a of the trace file
  ChainDiagnostics diagnostics;
  double final_sigma_site = 0.0;
  double max_resync_divergence = 0.0;
  double wall_seconds = 0.0;
  bool excluded = false;
};

struct AggregatePoint {
  int n = 0;
  double mean_radius = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  int chains_used = 0;
};

struct ResultManifest {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  std::vector<AggregatePoint> aggregates;
  std::optional<ScalingFit> fit;
  std::vector<std::string> warnings;
  std::string version = kVersion;
  double wall_seconds = 0.0;
};

/// Runs every chain on `jobs` workers, writes traces/N<n>_r<k>.csv (+ .json
/// sidecars) and aggregates.csv under config.output_dir, then manifest.json
/// last via atomic rename. Numeric output depends only on the config.
ResultManifest run_sweep(const ExperimentConfig& config, int jobs = 1);

nlohmann::json manifest_to_json(const ResultManifest& manifest);
nlohmann::json fit_to_json(const ScalingFit& fit, int d, int range_dim);

/// Scaling points stored in a manifest.json document.
std::vector<ScalingPoint> scaling_points_from_manifest(const nlohmann::json& manifest);

/// Checks that every trace referenced by the manifest exists under `dir`
/// with the recorded hash. Returns the list of problems (empty if clean).
std::vector<std::string> verify_manifest_files(const nlohmann::json& manifest, const std::filesystem::path& dir);

}  // namespace manifold
