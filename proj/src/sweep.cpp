#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "manifold/csv_io.hpp"
#include "manifold/experiment.hpp"
#include "manifold/parallel.hpp"

namespace manifold {

namespace {

std::string trace_name(int n, int replica) {
  return "traces/N" + std::to_string(n) + "_r" + std::to_string(replica);
}

std::vector<AggregatePoint> aggregate(const ExperimentConfig& config, std::vector<RunRecord>& runs,
                                      std::vector<std::string>& warnings) {
  std::vector<AggregatePoint> points;
  for (int n : config.n_values) {
    double ess_total = 0.0;
    std::vector<const RunRecord*> used;
    for (auto& run : runs) {
      if (run.n != n) continue;
      const auto& r = run.diagnostics.radius;
      if (run.diagnostics.low_confidence) {
        warnings.push_back(trace_name(n, run.replica) + ": low-confidence diagnostics");
      }
      if (r.degenerate || r.ess < config.min_ess) {
        run.excluded = true;
        warnings.push_back(trace_name(n, run.replica) + ": radius ESS " + format_double(r.ess) + " below " +
                           format_double(config.min_ess) + ", excluded");
        continue;
      }
      used.push_back(&run);
      ess_total += r.ess;
    }
    if (used.empty()) {
      warnings.push_back("N=" + std::to_string(n) + ": no usable chains");
      continue;
    }
    AggregatePoint p;
    p.n = n;
    p.ess = ess_total;
    p.chains_used = static_cast<int>(used.size());
    double within = 0.0;
    for (const auto* run : used) {
      const auto& r = run->diagnostics.radius;
      const double w = r.ess / ess_total;
      p.mean_radius += w * r.mean;
      within += w * w * r.std_error * r.std_error;
    }
    double between = 0.0;
    if (used.size() >= 2) {
      double mean = 0.0;
      for (const auto* run : used) mean += run->diagnostics.radius.mean;
      mean /= static_cast<double>(used.size());
      double var = 0.0;
      for (const auto* run : used) var += std::pow(run->diagnostics.radius.mean - mean, 2);
      var /= static_cast<double>(used.size() - 1);
      between = var / static_cast<double>(used.size());
    }
    p.std_error = std::sqrt(std::max(within, between));
    points.push_back(p);
  }
  return points;
}

}  // namespace

ResultManifest run_sweep(const ExperimentConfig& config, int jobs) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path out_dir(config.output_dir);
  std::filesystem::create_directories(out_dir / "traces");

  ResultManifest manifest;
  manifest.config = config;
  for (int n : config.n_values) {
    for (int r = 0; r < config.replicas; ++r) {
      RunRecord rec;
      rec.n = n;
      rec.replica = r;
      rec.seed = replica_seed(config.master_seed, n, r);
      rec.trace_file = trace_name(n, r) + ".csv";
      manifest.runs.push_back(rec);
    }
  }

  // Larger lattices first so the pool drains evenly; results land in fixed slots.
  std::vector<std::size_t> order(manifest.runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return manifest.runs[a].n > manifest.runs[b].n; });

  parallel_for(order.size(), resolve_jobs(jobs), [&](std::size_t k) {
    RunRecord& rec = manifest.runs[order[k]];
    const auto t0 = std::chrono::steady_clock::now();
    const ModelParams params = config.model_params(rec.n);
    const GffModel model(params);
    const Trace trace = run_chain(model, config.schedule, rec.seed);

    std::ostringstream csv;
    write_trace_csv(csv, trace);
    atomic_write(out_dir / rec.trace_file, csv.str());
    rec.trace_hash = hex64(fnv1a64(csv.str()));
    atomic_write(out_dir / (trace_name(rec.n, rec.replica) + ".json"),
                 trace_sidecar(trace, params, config.schedule).dump(2) + "\n");

    rec.diagnostics = diagnostics(trace);
    rec.final_sigma_site = trace.final_sigma_site;
    rec.max_resync_divergence = trace.max_resync_divergence;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  manifest.aggregates = aggregate(config, manifest.runs, manifest.warnings);

  std::ostringstream agg;
  agg << "N,mean_radius,stderr,ess,chains\n";
  for (const auto& p : manifest.aggregates) {
    agg << p.n << ',' << format_double(p.mean_radius) << ',' << format_double(p.std_error) << ','
        << format_double(p.ess) << ',' << p.chains_used << '\n';
  }
  atomic_write(out_dir / "aggregates.csv", agg.str());

  if (manifest.aggregates.size() >= 3) {
    std::vector<ScalingPoint> pts;
    for (const auto& p : manifest.aggregates) pts.push_back({double(p.n), p.mean_radius, p.std_error});
    manifest.fit = fit_scaling_exponent(pts, config.rho);
  } else {
    manifest.warnings.push_back("fewer than 3 usable N values; no exponent fit");
  }

  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  atomic_write(out_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return manifest;
}

nlohmann::json fit_to_json(const ScalingFit& fit, int d, int range_dim) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : fit.points) pts.push_back({{"N", p.n}, {"mean_radius", p.mean_radius}, {"stderr", p.std_error_radius}});
  nlohmann::json j = {{"points", pts},           {"exponent", fit.exponent}, {"stderr", fit.std_error},
                      {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"rho", fit.rho}};
  try {
    const auto t = theoretical_exponents(d, range_dim);
    j["target_exponents"] = {{"lower", t.lower}, {"upper", t.upper}};
  } catch (const UsageError&) {
    j["target_exponents"] = nullptr;
  }
  return j;
}

nlohmann::json manifest_to_json(const ResultManifest& m) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : m.runs) {
    runs.push_back({{"N", r.n},
                    {"replica", r.replica},
                    {"seed", r.seed},
                    {"trace_file", r.trace_file},
                    {"trace_hash", r.trace_hash},
                    {"diagnostics", diagnostics_to_json(r.diagnostics)},
                    {"final_sigma_site", r.final_sigma_site},
                    {"max_resync_divergence", r.max_resync_divergence},
                    {"excluded", r.excluded},
                    {"wall_seconds", r.wall_seconds}});
  }
  nlohmann::json aggregates = nlohmann::json::array();
  for (const auto& p : m.aggregates) {
    aggregates.push_back({{"N", p.n},
                          {"mean_radius", p.mean_radius},
                          {"stderr", p.std_error},
                          {"ess", p.ess},
                          {"chains", p.chains_used}});
  }
  nlohmann::json j = {{"version", m.version},       {"config", config_to_json(m.config)},
                      {"runs", runs},               {"aggregates", aggregates},
                      {"warnings", m.warnings},     {"wall_seconds", m.wall_seconds}};
  j["fit"] = m.fit ? fit_to_json(*m.fit, m.config.d, m.config.range_dim) : nlohmann::json(nullptr);
  return j;
}

std::vector<ScalingPoint> scaling_points_from_manifest(const nlohmann::json& manifest) {
  std::vector<ScalingPoint> pts;
  try {
    for (const auto& a : manifest.at("aggregates")) {
      pts.push_back({a.at("N").get<double>(), a.at("mean_radius").get<double>(), a.at("stderr").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed manifest: ") + e.what());
  }
  return pts;
}

std::vector<std::string> verify_manifest_files(const nlohmann::json& manifest, const std::filesystem::path& dir) {
  std::vector<std::string> problems;
  for (const auto& run : manifest.at("runs")) {
    const auto file = dir / run.at("trace_file").get<std::string>();
    if (!std::filesystem::exists(file)) {
      problems.push_back("missing " + file.string());
      continue;
    }
    if (hex64(fnv1a64(read_file(file))) != run.at("trace_hash").get<std::string>()) {
      problems.push_back("hash mismatch for " + file.string());
    }
  }
  return problems;
}

}  // namespace manifold
