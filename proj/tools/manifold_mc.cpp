// manifold_mc: command-line front end for the spectral sampler, the energy
// tools, the MCMC chains, scaling sweeps and the verification suite.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "manifold/checks.hpp"
#include "manifold/csv_io.hpp"
#include "manifold/experiment.hpp"
#include "manifold/gff.hpp"
#include "manifold/local_time.hpp"
#include "manifold/parallel.hpp"

namespace fs = std::filesystem;
using namespace manifold;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct ModelFlags {
  int n = 4;
  int d = 2;
  int range_dim = 1;
  double beta = 1.0;
  double gamma = 0.0;
  double drift = 0.0;

  void add_to(CLI::App* cmd, bool with_gamma, bool with_drift) {
    cmd->add_option("-N,--half-width", n, "lattice half-width N (side 2N+1)")->capture_default_str();
    cmd->add_option("-d,--dim", d, "lattice dimension d")->capture_default_str();
    cmd->add_option("-D,--range-dim", range_dim, "target dimension D")->capture_default_str();
    cmd->add_option("--beta", beta, "inverse temperature")->capture_default_str();
    if (with_gamma) cmd->add_option("--gamma", gamma, "repulsion strength")->capture_default_str();
    if (with_drift) cmd->add_option("--drift", drift, "add a * x_i to component i")->capture_default_str();
  }

  ModelParams params() const {
    ModelParams p;
    p.shape = LatticeShape(n, d);
    p.range_dim = range_dim;
    p.beta = beta;
    p.gamma = gamma;
    p.drift_a = drift;
    p.validate();
    return p;
  }
};

/// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    atomic_write(p, contents);
  }
}

nlohmann::json read_json_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : config_from_json(read_json_file(path));
}

checks::Level parse_level(const std::string& s) {
  return s == "full" ? checks::Level::full : checks::Level::quick;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo tools for weakly self-avoiding Gaussian elastic manifolds"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 1;
  std::string out;
  std::string config_path;
  int jobs = 0;
  std::string level = "quick";
  std::optional<double> rho;

  // spectrum
  ModelFlags spectrum_flags;
  auto* spectrum = app.add_subcommand("spectrum", "list Neumann Laplacian eigenvalues as CSV");
  spectrum_flags.add_to(spectrum, false, false);
  spectrum->add_option("--out", out, "output CSV (default stdout)");

  // sample
  ModelFlags sample_flags;
  auto* sample = app.add_subcommand("sample", "draw one exact prior field as CSV");
  sample_flags.add_to(sample, false, true);
  sample->add_option("--seed", seed, "random seed")->capture_default_str();
  sample->add_option("--out", out, "output CSV (default stdout); a .json sidecar records params and seed");

  // localtime
  ModelFlags lt_flags;
  std::string field_path;
  auto* localtime = app.add_subcommand("localtime", "local-time histogram and self-intersection energy");
  lt_flags.add_to(localtime, false, true);
  localtime->add_option("--input", field_path, "field CSV from `sample`; otherwise a field is drawn");
  localtime->add_option("--seed", seed, "random seed when drawing")->capture_default_str();
  localtime->add_option("--out", out, "histogram CSV (default stdout); energy goes to stderr");

  // mcmc
  ModelFlags mcmc_flags;
  mcmc_flags.gamma = 1.0;
  long sweeps = 0, burn_in = -1, thinning = 0, global_every = -1;
  auto* mcmc = app.add_subcommand("mcmc", "run one chain for the penalised measure");
  mcmc_flags.add_to(mcmc, true, false);
  mcmc->add_option("--config", config_path, "JSON file with a `schedule` object (other keys as for sweep)");
  mcmc->add_option("--sweeps", sweeps, "total sweeps");
  mcmc->add_option("--burn-in", burn_in, "burn-in sweeps");
  mcmc->add_option("--thin", thinning, "record every k-th sweep");
  mcmc->add_option("--global-every", global_every, "pCN move every k sweeps (0 = off)");
  mcmc->add_option("--seed", seed, "chain seed")->capture_default_str();
  mcmc->add_option("--out", out, "trace CSV path; a .json sidecar is written next to it")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "scaling experiment over N values and replicas");
  sweep->add_option("--config", config_path, "experiment JSON");
  sweep->add_option("--seed", seed, "override master_seed");
  sweep->add_option("--out", out, "override output_dir");
  sweep->add_option("--jobs", jobs, "worker threads (default $MANIFOLD_MC_JOBS or 1)");
  sweep->add_option("--rho", rho, "fixed log-log correction power in the fit");

  // verify
  std::string manifest_dir;
  auto* verify = app.add_subcommand("verify", "run the numerical verification suite");
  verify->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  verify->add_option("--seed", seed, "master seed")->capture_default_str();
  verify->add_option("--jobs", jobs, "worker threads (default $MANIFOLD_MC_JOBS or 1)");
  verify->add_option("--out", out, "JSON report path (default stdout)");
  verify->add_option("--manifest", manifest_dir, "also check trace hashes of a sweep output directory");

  // fit
  std::string fit_input;
  auto* fit = app.add_subcommand("fit", "refit the scaling exponent from a sweep manifest");
  auto* fit_positional = fit->add_option("path", fit_input, "manifest.json or its directory");
  fit->add_option("--manifest", fit_input, "manifest.json or its directory")->excludes(fit_positional);
  fit->add_option("--rho", rho, "fixed log-log correction power");
  fit->add_option("--out", out, "JSON fit report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (spectrum->parsed()) {
      const auto params = spectrum_flags.params();
      std::ostringstream os;
      write_spectrum_csv(os, build_spectrum_1d<double>(params.shape.half_width()), params.shape);
      emit(out, os.str());
      return 0;
    }

    if (sample->parsed()) {
      const auto params = sample_flags.params();
      const GffModel model(params);
      Rng rng(seed);
      auto field = sample_prior(model, rng).field;
      if (params.drift_a != 0.0) field = apply_drift(field, params.shape, params.drift_a);
      std::ostringstream os;
      write_field_csv(os, field, params.shape);
      emit(out, os.str());
      if (!out.empty() && out != "-") {
        fs::path sidecar(out);
        sidecar.replace_extension(".json");
        emit(sidecar.string(), nlohmann::json{{"params", params_to_json(params)}, {"seed", seed}}.dump(2) + "\n");
      }
      return 0;
    }

    if (localtime->parsed()) {
      FieldConfiguration<double> field;
      if (!field_path.empty()) {
        std::ifstream in(field_path);
        if (!in) throw UsageError("cannot open " + field_path);
        field = read_field_csv(in).field;
      } else {
        const auto params = lt_flags.params();
        const GffModel model(params);
        Rng rng(seed);
        field = sample_prior(model, rng).field;
        if (params.drift_a != 0.0) field = apply_drift(field, params.shape, params.drift_a);
      }
      const auto [lo, hi] = covering_window(field);
      std::ostringstream os;
      write_histogram_csv(os, local_time_histogram(field, lo, hi));
      emit(out, os.str());
      const auto e = self_intersection_energy(field);
      std::cerr << nlohmann::json{{"energy", e.total}, {"diagonal", e.diagonal}, {"offdiag", e.offdiag}}.dump()
                << '\n';
      return 0;
    }

    if (mcmc->parsed()) {
      McmcSchedule schedule = load_config(config_path).schedule;
      if (sweeps > 0) schedule.n_sweeps = sweeps;
      if (burn_in >= 0) schedule.burn_in = burn_in;
      if (thinning > 0) schedule.thinning = thinning;
      if (global_every >= 0) schedule.global_every = global_every;
      const auto params = mcmc_flags.params();
      const GffModel model(params);
      const Trace trace = run_chain(model, schedule, seed);
      std::ostringstream os;
      write_trace_csv(os, trace);
      emit(out, os.str());
      fs::path sidecar(out);
      sidecar.replace_extension(".json");
      emit(sidecar.string(), trace_sidecar(trace, params, schedule).dump(2) + "\n");
      const auto diag = diagnostics(trace);
      std::cerr << "radius " << diag.radius.mean << " +- " << diag.radius.std_error << " (ESS " << diag.radius.ess
                << "), site acceptance " << diag.accept_site << '\n';
      return 0;
    }

    if (sweep->parsed()) {
      ExperimentConfig config = load_config(config_path);
      if (sweep->count("--seed") > 0) config.master_seed = seed;
      if (!out.empty()) config.output_dir = out;
      if (rho) config.rho = *rho;
      const auto manifest = run_sweep(config, resolve_jobs(jobs));
      for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
      if (manifest.fit) {
        std::cout << "exponent " << manifest.fit->exponent << " +- " << manifest.fit->std_error << '\n';
      }
      std::cout << "manifest " << (fs::path(config.output_dir) / "manifest.json").string() << '\n';
      return 0;
    }

    if (verify->parsed()) {
      const auto results = checks::run_all(parse_level(level), seed, resolve_jobs(jobs));
      auto report = checks::report(results);
      report["level"] = level;
      report["seed"] = seed;
      report["version"] = kVersion;
      if (!manifest_dir.empty()) {
        const auto manifest = read_json_file((fs::path(manifest_dir) / "manifest.json").string());
        const auto problems = verify_manifest_files(manifest, manifest_dir);
        report["manifest_problems"] = problems;
        if (!problems.empty()) report["pass"] = false;
      }
      for (const auto& r : results) {
        std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s)\n";
      }
      emit(out, report.dump(2) + "\n");
      return report["pass"].get<bool>() ? 0 : kExitVerifyFailed;
    }

    if (fit->parsed()) {
      if (fit_input.empty()) throw UsageError("fit needs a manifest path");
      fs::path path(fit_input);
      if (fs::is_directory(path)) path /= "manifest.json";
      const auto manifest = read_json_file(path.string());
      int d = 2, range_dim = 1;
      double fit_rho = 0.0;
      if (manifest.contains("config")) {
        d = manifest["config"].value("d", 2);
        range_dim = manifest["config"].value("D", 1);
        fit_rho = manifest["config"].value("rho", 0.0);
      }
      if (rho) fit_rho = *rho;
      const auto result = fit_scaling_exponent(scaling_points_from_manifest(manifest), fit_rho);
      const auto j = fit_to_json(result, d, range_dim);
      std::cout << "exponent " << result.exponent << " +- " << result.std_error << " (rho " << fit_rho << ")\n";
      if (!j["target_exponents"].is_null()) {
        std::cout << "target [" << j["target_exponents"]["lower"].get<double>() << ", "
                  << j["target_exponents"]["upper"].get<double>() << "]\n";
      }
      if (!out.empty()) emit(out, j.dump(2) + "\n");
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return kExitUsage;
}
