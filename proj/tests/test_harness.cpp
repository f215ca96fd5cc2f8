#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "manifold/checks.hpp"
#include "manifold/csv_io.hpp"
#include "manifold/experiment.hpp"
#include "manifold/parallel.hpp"
#include "manifold/stats.hpp"

namespace fs = std::filesystem;
using namespace manifold;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("manifold_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.n_values = {2, 3, 4};
  c.replicas = 2;
  c.schedule.n_sweeps = 400;
  c.schedule.burn_in = 100;
  c.schedule.thinning = 2;
  c.schedule.global_every = 7;
  c.min_ess = 5.0;
  c.master_seed = 42;
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("format and hash helpers") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("seed splitting") {
  CHECK(replica_seed(1, 4, 0) == replica_seed(1, 4, 0));
  CHECK(replica_seed(1, 4, 0) != replica_seed(1, 4, 1));
  CHECK(replica_seed(1, 4, 0) != replica_seed(1, 6, 0));
  CHECK(replica_seed(1, 4, 0) != replica_seed(2, 4, 0));
  CHECK(split_seed(7, 1) != split_seed(7, 2));
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig c;
  c.n_values = {3, 5, 7, 9};
  c.gamma = 0.25;
  c.schedule.global_every = 3;
  c.schedule.tune_sigma = false;
  c.master_seed = 123456789012345ULL;
  c.rho = -0.5;
  const auto j = config_to_json(c);
  CHECK(config_from_json(j) == c);
  CHECK(config_from_json(nlohmann::json::parse(j.dump())) == c);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"N_values", {4, 6, 8}}, {"typo", 1}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schedule", {{"n_sweep", 10}}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"beta", "one"}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schedule", {{"n_sweeps", "many"}}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"N_values", {4, 6}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"replicas", 1}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"N_values", {1, 2, 3}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"D", 3}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), UsageError);
  CHECK_NOTHROW(config_from_json(nlohmann::json::object()));
}

TEST_CASE("spectrum CSV") {
  std::ostringstream os;
  write_spectrum_csv(os, build_spectrum_1d<double>(1), LatticeShape(1, 2));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "mode,k_tuple,lambda");
  std::getline(is, line);
  CHECK(line == "0,0;0,0");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("field CSV round trip") {
  ModelParams p;
  p.shape = LatticeShape(2, 2);
  p.range_dim = 2;
  const GffModel model(p);
  Rng rng(5);
  const auto field = sample_prior(model, rng).field;
  std::ostringstream os;
  write_field_csv(os, field, p.shape);
  CHECK(os.str().rfind("site_index,x_1,x_2,u_1,u_2\n0,-2,-2,", 0) == 0);
  std::istringstream is(os.str());
  const auto back = read_field_csv(is);
  CHECK(back.field.values == field.values);
  CHECK(back.shape == p.shape);
  FieldConfiguration<double> wrong{MatrixX<double>::Zero(3, 1)};
  CHECK_THROWS_AS(write_field_csv(os, wrong, p.shape), UsageError);
}

TEST_CASE("field CSV parse errors") {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return read_field_csv(is);
  };
  CHECK_THROWS_AS(parse(""), UsageError);
  CHECK_THROWS_AS(parse("index,x_1,u_1\n"), UsageError);
  CHECK_THROWS_AS(parse("site_index,x_1,v_1\n"), UsageError);
  CHECK_THROWS_AS(parse("site_index,u_1\n0,1\n"), UsageError);
  const std::string head = "site_index,x_1,u_1\n";
  CHECK_THROWS_AS(parse(head), UsageError);
  CHECK_THROWS_AS(parse(head + "0,-1,0.5\n1,0,0.1\n"), UsageError);            // too few rows
  CHECK_THROWS_AS(parse(head + "0,-1,0.5\n1,0,x\n2,1,0\n"), UsageError);      // bad number
  CHECK_THROWS_AS(parse(head + "0,-1,0.5\n2,0,0.1\n1,1,0\n"), UsageError);    // order
  CHECK_THROWS_AS(parse(head + "0,-1,0.5,9\n1,0,0.1\n2,1,0\n"), UsageError);  // columns
  const auto ok = parse(head + "0,-1,0.5\n1,0,0.1\n2,1,0\n");
  CHECK(ok.field.values(0, 0) == 0.5);
  CHECK(ok.shape.half_width() == 1);
}

TEST_CASE("histogram and trace CSV") {
  FieldConfiguration<double> f{MatrixX<double>(3, 2)};
  f.values << 0, 0, 0, 1, 1, 1;
  std::ostringstream h;
  write_histogram_csv(h, local_time_histogram(f, {0, 0}, {1, 1}));
  CHECK(h.str() == "z_tuple,count\n0;0,1\n0;1,1\n1;0,0\n1;1,1\n");

  Trace t;
  t.extra_names = {"obs"};
  t.rows.push_back({10, 1.5, 2.0, 0.25, 0.0, {3.0}});
  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str() == "sweep,energy,radius,accept_site,accept_global,obs\n10,1.5,2,0.25,0,3\n");
}

TEST_CASE("atomic write leaves no temporary file") {
  const auto dir = scratch_dir("atomic");
  atomic_write(dir / "a.txt", "hello\n");
  CHECK(read_file(dir / "a.txt") == "hello\n");
  atomic_write(dir / "a.txt", "bye\n");
  CHECK(read_file(dir / "a.txt") == "bye\n");
  long files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file() ? 1 : 0;
  CHECK(files == 1);
  CHECK_THROWS(read_file(dir / "missing.txt"));
}

TEST_CASE("parallel_for runs every task and rethrows failures") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("task 7");
                  }),
                  std::runtime_error);
}

TEST_CASE("job count resolution") {
  CHECK(resolve_jobs(3) == 3);
  ::setenv("MANIFOLD_MC_JOBS", "5", 1);
  CHECK(resolve_jobs(0) == 5);
  ::setenv("MANIFOLD_MC_JOBS", "junk", 1);
  CHECK(resolve_jobs(0) == 1);
  ::unsetenv("MANIFOLD_MC_JOBS");
  CHECK(resolve_jobs(0) == 1);
}

TEST_CASE("running statistics merge") {
  RunningStats a, b, all;
  for (int i = 0; i < 10; ++i) {
    (i < 4 ? a : b).push(i * 1.5);
    all.push(i * 1.5);
  }
  a.merge(b);
  CHECK(a.n == all.n);
  CHECK(a.mean == doctest::Approx(all.mean));
  CHECK(a.variance() == doctest::Approx(all.variance()));
}

TEST_CASE("KS test against a normal law") {
  Rng rng(12);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> xs(4000);
  for (auto& x : xs) x = normal(rng);
  CHECK(ks_test_normal(xs, 2.0).p_value > 0.01);
  CHECK(ks_test_normal(xs, 1.0).p_value < 1e-6);
  CHECK(ks_test_normal({}, 1.0).p_value == 1.0);
}

TEST_CASE("sweep writes traces, aggregates and a verifiable manifest") {
  const auto dir = scratch_dir("sweep");
  const auto config = tiny_config(dir / "a");
  const auto m = run_sweep(config, 1);
  REQUIRE(m.runs.size() == 6);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(fs::exists(dir / "a" / "aggregates.csv"));
  CHECK(fs::exists(dir / "a" / "traces" / "N3_r1.csv"));
  CHECK(fs::exists(dir / "a" / "traces" / "N3_r1.json"));
  REQUIRE(m.fit.has_value());
  CHECK(m.aggregates.size() == 3);

  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["version"] == kVersion);
  CHECK(config_from_json(manifest["config"]) == config);
  CHECK(verify_manifest_files(manifest, dir / "a").empty());
  CHECK(scaling_points_from_manifest(manifest).size() == 3);
  CHECK(manifest["fit"]["target_exponents"]["lower"].get<double>() == doctest::Approx(4.0 / 3.0));

  // Same seeds, different worker count: byte-identical traces.
  auto again = config;
  again.output_dir = (dir / "b").string();
  const auto m2 = run_sweep(again, 3);
  for (std::size_t i = 0; i < m.runs.size(); ++i) {
    CHECK(m.runs[i].trace_hash == m2.runs[i].trace_hash);
    CHECK(read_file(dir / "a" / m.runs[i].trace_file) == read_file(dir / "b" / m2.runs[i].trace_file));
  }
  CHECK(read_file(dir / "a" / "aggregates.csv") == read_file(dir / "b" / "aggregates.csv"));

  // Tampering is detected.
  {
    std::ofstream f(dir / "a" / "traces" / "N2_r0.csv", std::ios::app);
    f << "1,2,3,4,5\n";
  }
  fs::remove(dir / "a" / "traces" / "N4_r1.csv");
  const auto problems = verify_manifest_files(manifest, dir / "a");
  CHECK(problems.size() == 2);
}

TEST_CASE("sweep excludes chains below the ESS threshold") {
  const auto dir = scratch_dir("sweep_ess");
  auto config = tiny_config(dir);
  config.min_ess = 1e9;
  const auto m = run_sweep(config, 1);
  CHECK(m.aggregates.empty());
  CHECK_FALSE(m.fit.has_value());
  CHECK_FALSE(m.warnings.empty());
  for (const auto& r : m.runs) CHECK(r.excluded);
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["fit"].is_null());
}

TEST_CASE("malformed manifests are usage errors") {
  CHECK_THROWS_AS(scaling_points_from_manifest(nlohmann::json::object()), UsageError);
  CHECK_THROWS_AS(scaling_points_from_manifest(nlohmann::json{{"aggregates", {{{"N", 4}}}}}), UsageError);
}

TEST_CASE("quick verification checks") {
  using checks::Level;
  CHECK(checks::spectral_exactness(Level::quick).pass);
  CHECK(checks::energy_exactness(Level::quick, 1).pass);
  CHECK(checks::drift_identities(Level::quick, 1).pass);
  CHECK(checks::variance_bound_shapes(Level::quick, 1).pass);
  const auto chain = checks::mcmc_gamma_zero(Level::quick, 1);
  CHECK(chain.values["ks_p_value"].get<double>() > 0.0);
  CHECK(chain.values.contains("abs_z"));
  const auto a = checks::gamma_zero_reference_chain(Level::quick, 3);
  const auto b = checks::gamma_zero_reference_chain(Level::quick, 3);
  CHECK(a.column("coef") == b.column("coef"));
  const auto report = checks::report({checks::spectral_exactness(Level::quick)});
  CHECK(report["pass"].get<bool>());
  CHECK(report["checks"][0]["name"] == "spectral_exactness");
}
