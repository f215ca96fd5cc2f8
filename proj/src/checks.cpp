#include "manifold/checks.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "manifold/bounds.hpp"
#include "manifold/gff.hpp"
#include "manifold/local_time.hpp"
#include "manifold/stats.hpp"

namespace manifold::checks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool full(Level level) { return level == Level::full; }

void finish(CheckResult& r, Clock::time_point t0, double limit_seconds) {
  r.seconds = seconds_since(t0);
  r.values["runtime_limit_seconds"] = limit_seconds;
  if (r.seconds >= limit_seconds) r.pass = false;
}

FieldConfiguration<double> random_cloud(Rng& rng, Index m, Index dim, double box) {
  std::uniform_real_distribution<double> u(0.0, box);
  FieldConfiguration<double> f{MatrixX<double>(m, dim)};
  for (Index s = 0; s < m; ++s) {
    for (Index i = 0; i < dim; ++i) f.values(s, i) = u(rng);
  }
  return f;
}

/// Box edge giving a few overlaps per site.
double crowded_box(Index m, Index dim) { return 1.0 + 0.5 * std::pow(static_cast<double>(m), 1.0 / dim); }

/// Sample variance and its standard error sqrt((m4 - s^4) / n).
std::pair<double, double> variance_with_error(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - mean) * (x - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  return {m2 * n / (n - 1.0), std::sqrt(std::max(m4 - m2 * m2, 0.0) / n)};
}

ModelParams params_for(int n, int d, int range_dim, double beta, double gamma) {
  ModelParams p;
  p.shape = LatticeShape(n, d);
  p.range_dim = range_dim;
  p.beta = beta;
  p.gamma = gamma;
  return p;
}

}  // namespace

CheckResult spectral_exactness(Level level) {
  const auto t0 = Clock::now();
  CheckResult r{"spectral_exactness", true, "eigenvalues 1e-9, orthonormality 1e-10, runtime < 10 s", {}, 0.0};
  const int n_max = full(level) ? 8 : 4;
  double eig_err = 0.0, ortho_err = 0.0, residual = 0.0;
  for (int d = 1; d <= 2; ++d) {
    for (int n = 1; n <= n_max; ++n) {
      const LatticeShape shape(n, d);
      const auto spec = build_spectrum_1d<double>(n);
      const auto lap = dense_laplacian<double>(shape);
      Eigen::SelfAdjointEigenSolver<MatrixX<double>> solver(lap, Eigen::EigenvaluesOnly);
      const auto modes = mode_eigenvalues(spec, shape);
      std::vector<double> ours(modes.data(), modes.data() + modes.size());
      ours.push_back(0.0);
      std::sort(ours.begin(), ours.end());
      for (std::size_t k = 0; k < ours.size(); ++k) {
        eig_err = std::max(eig_err, std::abs(ours[k] - solver.eigenvalues()(static_cast<Index>(k))));
      }
      if (d == 1) {
        const Index m = spec.basis.rows();
        ortho_err = std::max(ortho_err, (spec.basis.transpose() * spec.basis - MatrixX<double>::Identity(m, m))
                                            .cwiseAbs()
                                            .maxCoeff());
        residual = std::max(residual, (lap * spec.basis - spec.basis * spec.eigenvalues.asDiagonal())
                                          .cwiseAbs()
                                          .maxCoeff());
      }
    }
  }
  r.pass = eig_err <= 1e-9 && ortho_err <= 1e-10 && residual <= 1e-9;
  r.values = {{"max_half_width", n_max}, {"max_eigenvalue_error", eig_err},
              {"max_orthonormality_error", ortho_err}, {"max_1d_residual", residual}};
  finish(r, t0, 10.0);
  return r;
}

CheckResult energy_exactness(Level level, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"energy_exactness", true,
                "quadrature 1e-2 relative, brute force 1e-9, incremental 1e-9, runtime < 60 s", {}, 0.0};
  Rng rng(split_seed(seed, 2));
  const int n_quad = full(level) ? 50 : 10;
  const int n_brute = full(level) ? 100 : 20;
  const int n_moves = 200;

  double quad_rel = 0.0;
  for (int k = 0; k < n_quad; ++k) {
    const Index dim = 1 + k % 2;
    const Index m = std::uniform_int_distribution<Index>(1, 20)(rng);
    const auto f = random_cloud(rng, m, dim, crowded_box(m, dim));
    const double exact = self_intersection_energy(f).total;
    quad_rel = std::max(quad_rel, std::abs(energy_by_quadrature(f, 1e-3) - exact) / exact);
  }

  double brute_abs = 0.0;
  for (int k = 0; k < n_brute; ++k) {
    const Index dim = 1 + k % 3;
    const Index m = std::uniform_int_distribution<Index>(1, 200)(rng);
    const auto f = random_cloud(rng, m, dim, crowded_box(m, dim));
    brute_abs = std::max(brute_abs, std::abs(self_intersection_energy(f).total - brute_force_energy(f).total));
  }

  double delta_abs = 0.0;
  {
    const Index m = 60, dim = 2;
    auto f = random_cloud(rng, m, dim, crowded_box(m, dim));
    CellIndex<double> cells(f);
    double energy = self_intersection_energy(f, cells).total;
    std::normal_distribution<double> normal(0.0, 0.7);
    std::uniform_int_distribution<Index> pick(0, m - 1);
    for (int k = 0; k < n_moves; ++k) {
      const Index s = pick(rng);
      Point<double> p = f.values.row(s);
      for (Index i = 0; i < dim; ++i) p(i) += normal(rng);
      const double delta = energy_delta_single_site(f, cells, s, p);
      f.values.row(s) = p;
      cells.move(s, p);
      energy += delta;
      delta_abs = std::max(delta_abs, std::abs(energy - brute_force_energy(f).total));
    }
  }

  r.pass = quad_rel <= 1e-2 && brute_abs <= 1e-9 && delta_abs <= 1e-9;
  r.values = {{"quadrature_instances", n_quad}, {"max_quadrature_relative_error", quad_rel},
              {"brute_force_instances", n_brute}, {"max_brute_force_error", brute_abs},
              {"incremental_moves", n_moves},     {"max_incremental_error", delta_abs}};
  finish(r, t0, 60.0);
  return r;
}

CheckResult gaussian_exactness(Level level, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"gaussian_exactness", true, "3 sigma per pair and for E[dP^/dP] = 1, runtime < 120 s", {}, 0.0};
  const long n_samples = full(level) ? 10000 : 2000;
  const long n_rn = full(level) ? 100000 : 10000;
  const int n_pairs = 20;

  nlohmann::json cases = nlohmann::json::array();
  double worst_z = 0.0;
  for (int d : {2, 3}) {
    for (int n : {2, 3}) {
      const GffModel model(params_for(n, d, 1, 1.0, 0.0));
      const Index m = model.shape().total_sites();
      Rng rng(split_seed(seed, 3, static_cast<std::uint64_t>(10 * d + n)));
      std::uniform_int_distribution<Index> pick(0, m - 1);
      std::vector<std::pair<Index, Index>> pairs;
      while (static_cast<int>(pairs.size()) < n_pairs) {
        const Index z = pick(rng), w = pick(rng);
        if (z != w) pairs.emplace_back(z, w);
      }
      std::vector<std::vector<double>> diffs(pairs.size());
      for (long s = 0; s < n_samples; ++s) {
        const auto sample = sample_prior(model, rng);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          diffs[p].push_back(sample.field.values(pairs[p].first, 0) - sample.field.values(pairs[p].second, 0));
        }
      }
      int failures = 0;
      double case_worst = 0.0;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [var, se] = variance_with_error(diffs[p]);
        const double exact = pair_difference_variance(pairs[p].first, pairs[p].second, 0, model).value;
        const double z = std::abs(var - exact) / se;
        case_worst = std::max(case_worst, z);
        if (z > 3.0) ++failures;
      }
      worst_z = std::max(worst_z, case_worst);
      if (failures > 0) r.pass = false;
      cases.push_back({{"N", n}, {"d", d}, {"pairs", n_pairs}, {"failures", failures}, {"max_abs_z", case_worst}});
    }
  }

  const GffModel model(params_for(2, 2, 1, 1.0, 0.0));
  Rng rng(split_seed(seed, 4));
  RunningStats rn;
  for (long s = 0; s < n_rn; ++s) {
    rn.push(std::exp(log_rn_derivative(sample_coefficients(model, rng), model.drift(), model, 0.3)));
  }
  const double rn_z = std::abs(rn.mean - 1.0) / rn.std_error();
  if (rn_z > 3.0) r.pass = false;

  r.values = {{"samples_per_case", n_samples}, {"cases", cases}, {"max_abs_z", worst_z},
              {"rn_samples", n_rn},            {"rn_mean", rn.mean}, {"rn_std_error", rn.std_error()},
              {"rn_abs_z", rn_z}};
  finish(r, t0, 120.0);
  return r;
}

CheckResult drift_identities(Level level, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"drift_identities", true,
                "sum identity 1e-12 relative, E[Y_j] within 3 sigma, I2 ratio spread < 2, runtime < 120 s", {}, 0.0};
  const double a = 0.5;

  double identity_err = 0.0;
  for (int d : {1, 2, 3}) {
    for (int n : {1, 2, 4, 8}) {
      for (int range_dim = 1; range_dim <= d; ++range_dim) {
        const GffModel model(params_for(n, d, range_dim, 1.3, 0.0));
        double sum = 0.0;
        for (int i = 0; i < range_dim; ++i) {
          for (int j = 1; j <= 2 * n; ++j) sum += expected_y_exact(j, model, a);
        }
        const double exact = i2_exact(model, a);
        identity_err = std::max(identity_err, std::abs(-sum - exact) / std::max(std::abs(exact), 1e-300));
      }
    }
  }
  if (identity_err > 1e-12) r.pass = false;

  const long n_samples = full(level) ? 100000 : 10000;
  const GffModel model(params_for(2, 2, 1, 1.0, 0.0));
  nlohmann::json ys = nlohmann::json::array();
  double worst_z = 0.0;
  for (int j = 1; j <= 4; ++j) {
    const auto est = expected_y_monte_carlo(j, model, a, n_samples, split_seed(seed, 5, static_cast<std::uint64_t>(j)));
    const double exact = expected_y_exact(j, model, a);
    const double z = std::abs(est.value - exact) / est.std_error;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) r.pass = false;
    ys.push_back({{"j", j}, {"estimate", est.value}, {"std_error", est.std_error}, {"exact", exact}, {"abs_z", z}});
  }

  nlohmann::json lemma = nlohmann::json::object();
  for (int d : {2, 3}) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int n = 2; n <= 64; ++n) {
      const double ratio = coefficient_sum(build_spectrum_1d<double>(n), d).ratio;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    if (hi / lo >= 2.0) r.pass = false;
    lemma["d" + std::to_string(d)] = {{"min_ratio", lo}, {"max_ratio", hi}, {"spread", hi / lo}};
  }

  r.values = {{"max_identity_relative_error", identity_err}, {"a", a}, {"samples", n_samples},
              {"expected_y", ys}, {"max_abs_z", worst_z}, {"lemma_ratio", lemma}};
  finish(r, t0, 120.0);
  return r;
}

CheckResult variance_bound_shapes(Level level, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"variance_bound_shapes", true,
                "d=2: max_N ratio to (log N)^2 <= 2 x ratio at smallest N; d=3: max/min < 2; runtime < 600 s", {}, 0.0};
  const int n_pairs = full(level) ? 1000 : 200;

  auto max_pair_variance = [&](int n, int d, Rng& rng) {
    const GffModel model(params_for(n, d, 1, 1.0, 0.0));
    const Index m = model.shape().total_sites();
    // The corner-to-corner diagonal is always included.
    double best = pair_difference_variance(0, m - 1, 0, model).value;
    std::uniform_int_distribution<Index> pick(0, m - 1);
    for (int p = 0; p < n_pairs; ++p) {
      const Index z = pick(rng), w = pick(rng);
      if (z != w) best = std::max(best, pair_difference_variance(z, w, 0, model).value);
    }
    return best;
  };

  Rng rng(split_seed(seed, 6));
  nlohmann::json d2 = nlohmann::json::array();
  std::vector<double> ratios;
  for (int n : {4, 8, 16, 32}) {
    const double v = max_pair_variance(n, 2, rng);
    const double ratio = v / std::pow(std::log(static_cast<double>(n)), 2);
    ratios.push_back(ratio);
    d2.push_back({{"N", n}, {"max_variance", v}, {"ratio_to_log2", ratio}});
  }
  const double growth = *std::max_element(ratios.begin(), ratios.end()) / ratios.front();
  const double spread = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
  if (growth > 2.0) r.pass = false;

  nlohmann::json d3 = nlohmann::json::array();
  std::vector<double> maxima;
  for (int n : {2, 4, 8}) {
    const double v = max_pair_variance(n, 3, rng);
    maxima.push_back(v);
    d3.push_back({{"N", n}, {"max_variance", v}});
  }
  const double d3_spread =
      *std::max_element(maxima.begin(), maxima.end()) / *std::min_element(maxima.begin(), maxima.end());
  if (d3_spread >= 2.0) r.pass = false;

  r.values = {{"pairs_per_lattice", n_pairs}, {"d2", d2},          {"d2_growth", growth},
              {"d2_two_sided_spread", spread}, {"d3", d3},          {"d3_spread", d3_spread}};
  finish(r, t0, 600.0);
  return r;
}

CheckResult jensen_bound(Level level, std::uint64_t seed, int jobs) {
  const auto t0 = Clock::now();
  CheckResult r{"jensen_bound", true,
                "|logZ_lower| / rate spread < 3 over N in {2,4,8,16}; direct log Z >= lower - 3 sigma; runtime < 600 s",
                {}, 0.0};
  const long n_i1 = full(level) ? 2000 : 300;

  nlohmann::json shape = nlohmann::json::array();
  std::vector<double> ratios;
  for (int n : {2, 4, 8, 16}) {
    const GffModel model(params_for(n, 2, 1, 1.0, 1.0));
    const auto rep = jensen_lower_bound(model, {}, n_i1, split_seed(seed, 7, static_cast<std::uint64_t>(n)), jobs);
    const double ratio = std::abs(rep.log_z_lower) / rep.predicted_rate;
    ratios.push_back(ratio);
    shape.push_back({{"N", n},
                     {"a", rep.a},
                     {"i1", rep.i1.value},
                     {"i1_std_error", rep.i1.std_error},
                     {"i2", rep.i2_exact},
                     {"log_z_lower", rep.log_z_lower},
                     {"predicted_rate", rep.predicted_rate},
                     {"ratio", ratio}});
  }
  const double spread = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
  if (spread >= 3.0) r.pass = false;

  // Toy lattices where log Z is directly estimable.
  const long n_direct = full(level) ? 200000 : 20000;
  const long n_direct_1d = full(level) ? 2000000 : 200000;
  const long n_toy_i1 = full(level) ? 20000 : 2000;
  struct Toy {
    int n, d;
    double beta, gamma;
    long samples;
  };
  std::vector<Toy> toys;
  Rng rng(split_seed(seed, 8));
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int k = 0; k < 10; ++k) {
    const double beta = u(rng), gamma = u(rng);
    toys.push_back({1, 2, beta, gamma, n_direct});
  }
  toys.push_back({1, 1, 1.0, 1.0, n_direct_1d});
  toys.push_back({4, 1, 1.0, 1.0, n_direct});

  nlohmann::json toy_json = nlohmann::json::array();
  int violations = 0;
  for (std::size_t k = 0; k < toys.size(); ++k) {
    const auto& t = toys[k];
    const GffModel model(params_for(t.n, t.d, 1, t.beta, t.gamma));
    const auto direct = direct_log_z(model, t.samples, split_seed(seed, 9, k), jobs);
    for (const DriftChoice drift : {DriftChoice{true, 0.0}, DriftChoice{false, 0.5}}) {
      const auto rep = jensen_lower_bound(model, drift, n_toy_i1, split_seed(seed, 10, k), jobs);
      const double sigma = std::hypot(direct.std_error, rep.i1.std_error);
      const bool ok = direct.value >= rep.log_z_lower - 3.0 * sigma;
      if (!ok) ++violations;
      toy_json.push_back({{"N", t.n},
                          {"d", t.d},
                          {"beta", t.beta},
                          {"gamma", t.gamma},
                          {"a", rep.a},
                          {"log_z_direct", direct.value},
                          {"log_z_direct_std_error", direct.std_error},
                          {"log_z_lower", rep.log_z_lower},
                          {"sigma", sigma},
                          {"holds", ok}});
    }
  }
  if (violations > 0) r.pass = false;

  r.values = {{"i1_samples", n_i1}, {"shape", shape}, {"ratio_spread", spread}, {"toy", toy_json},
              {"toy_violations", violations}};
  finish(r, t0, 600.0);
  return r;
}

Trace gamma_zero_reference_chain(Level level, std::uint64_t seed) {
  const GffModel model(params_for(2, 2, 1, 1.0, 0.0));
  const Index last = model.shape().total_sites() - 1;
  McmcSchedule schedule;
  schedule.thinning = 10;
  schedule.burn_in = 2000;
  schedule.n_sweeps = schedule.burn_in + schedule.thinning * (full(level) ? 20000 : 3000);
  schedule.global_every = 10;
  schedule.pcn_s = 0.3;
  const std::vector<Observer> observers{
      {"diff", [last](const ChainState& s) { return s.field.values(0, 0) - s.field.values(last, 0); }},
      {"coef", [&model](const ChainState& s) {
         return analyze(s.field, model.spectrum(), model.shape()).values(0, 0);
       }}};
  return run_chain(model, schedule, split_seed(seed, 11), observers);
}

CheckResult mcmc_gamma_zero(Level level, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const double min_ess = full(level) ? 1000.0 : 200.0;
  CheckResult r{"mcmc_gamma_zero", true,
                "Var(u(z)-u(w)) within 3 sigma, ESS >= " + std::to_string(static_cast<int>(min_ess)) +
                    ", KS p >= 0.01, runtime < 300 s",
                {}, 0.0};
  const GffModel model(params_for(2, 2, 1, 1.0, 0.0));
  const Index last = model.shape().total_sites() - 1;
  const Trace trace = gamma_zero_reference_chain(level, seed);

  const auto diff = trace.column("diff");
  const auto diff_summary = summarize_series(diff);
  std::vector<double> squares;
  for (double v : diff) squares.push_back((v - diff_summary.mean) * (v - diff_summary.mean));
  const auto sq = summarize_series(squares);
  const double exact = pair_difference_variance(0, last, 0, model).value;
  const double z = std::abs(sq.mean - exact) / sq.std_error;

  const auto coef = trace.column("coef");
  const auto coef_summary = summarize_series(coef);
  const auto gap = static_cast<std::size_t>(std::ceil(coef_summary.iat));
  std::vector<double> thinned;
  for (std::size_t i = 0; i < coef.size(); i += gap) thinned.push_back(coef[i]);
  const auto ks = ks_test_normal(thinned, model.mode_stddev()(0));

  const double ess = std::min({diff_summary.ess, sq.ess, coef_summary.ess});
  r.pass = !trace.aborted && z <= 3.0 && ess >= min_ess && ks.p_value >= 0.01;
  r.values = {{"samples", diff.size()},
              {"variance_estimate", sq.mean},
              {"variance_std_error", sq.std_error},
              {"variance_exact", exact},
              {"abs_z", z},
              {"min_ess", ess},
              {"ess_required", min_ess},
              {"coef_iat", coef_summary.iat},
              {"ks_samples", thinned.size()},
              {"ks_statistic", ks.statistic},
              {"ks_p_value", ks.p_value},
              {"accept_site", trace.site.rate()},
              {"accept_global", trace.global.rate()}};
  finish(r, t0, 300.0);
  return r;
}

std::vector<CheckResult> run_all(Level level, std::uint64_t seed, int jobs) {
  return {spectral_exactness(level),      energy_exactness(level, seed),      gaussian_exactness(level, seed),
          drift_identities(level, seed),  variance_bound_shapes(level, seed), jensen_bound(level, seed, jobs),
          mcmc_gamma_zero(level, seed)};
}

nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name}, {"pass", r.pass}, {"threshold", r.threshold}, {"seconds", r.seconds}, {"values", r.values}};
}

nlohmann::json report(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool pass = true;
  for (const auto& r : results) {
    checks.push_back(to_json(r));
    pass = pass && r.pass;
  }
  return {{"pass", pass}, {"checks", checks}};
}

}  // namespace manifold::checks
