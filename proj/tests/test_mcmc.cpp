#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "manifold/mcmc.hpp"

using namespace manifold;

namespace {

GffModel model_for(int n, int d, int range_dim, double gamma) {
  ModelParams p;
  p.shape = LatticeShape(n, d);
  p.range_dim = range_dim;
  p.gamma = gamma;
  return GffModel(p);
}

std::vector<double> ar1(double phi, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> xs(static_cast<std::size_t>(n));
  double x = 0.0;
  for (auto& v : xs) {
    x = phi * x + normal(rng);
    v = x;
  }
  return xs;
}

}  // namespace

TEST_CASE("schedule validation") {
  McmcSchedule s;
  CHECK_NOTHROW(s.validate());
  auto bad = s;
  bad.n_sweeps = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = s;
  bad.burn_in = s.n_sweeps;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = s;
  bad.thinning = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = s;
  bad.pcn_s = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = s;
  bad.sigma_site = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = s;
  bad.site_moves = false;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.global_every = 1;
  CHECK_NOTHROW(bad.validate());
  bad = s;
  bad.target_accept = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("site moves satisfy detailed balance at the move level") {
  for (int range_dim : {1, 2}) {
    const auto model = model_for(3, 2, range_dim, 1.5);
    ChainState state = init_chain(model, 21);
    std::normal_distribution<double> normal(0.0, 0.6);
    std::uniform_int_distribution<Index> pick(0, state.field.sites() - 1);
    for (int k = 0; k < 200; ++k) {
      const Index s = pick(state.rng);
      const Point<double> old_value = state.field.values.row(s);
      Point<double> p = old_value;
      for (Index i = 0; i < range_dim; ++i) p(i) += normal(state.rng);
      const double forward = site_move_log_ratio(state, model, s, p);
      state.field.values.row(s) = p;
      state.cells.move(s, p);
      const double reverse = site_move_log_ratio(state, model, s, old_value);
      CHECK(std::abs(forward + reverse) < 1e-9);
      if (k % 2 == 0) {  // keep half of the moves
        state.field.values.row(s) = old_value;
        state.cells.move(s, old_value);
      }
    }
  }
}

TEST_CASE("cached energy stays consistent over 1e5 site updates") {
  const auto model = model_for(4, 2, 1, 1.0);
  McmcSchedule schedule;
  schedule.resync_every = 0;
  ChainState state = init_chain(model, 3);
  long proposals = 0;
  while (proposals < 100000) {
    metropolis_site_sweep(state, model, schedule);
    proposals += state.field.sites();
  }
  CHECK(state.site.accepted > 1000);
  CHECK(std::abs(state.energy - brute_force_energy(state.field).total) < 1e-6);
  CHECK(resync_energy(state) < 1e-6);
}

TEST_CASE("gamma = 0 marks the energy stale and recomputes lazily") {
  const auto model = model_for(2, 2, 1, 0.0);
  McmcSchedule schedule;
  ChainState state = init_chain(model, 4);
  metropolis_site_sweep(state, model, schedule);
  CHECK(state.energy_stale);
  CHECK(current_energy(state) == doctest::Approx(brute_force_energy(state.field).total));
  CHECK_FALSE(state.energy_stale);
}

TEST_CASE("pCN moves") {
  McmcSchedule schedule;
  schedule.pcn_s = 0.5;
  {
    const auto model = model_for(2, 2, 1, 0.0);
    ChainState state = init_chain(model, 5);
    for (int k = 0; k < 20; ++k) CHECK(pcn_global_move(state, model, schedule));
    CHECK(state.global.rate() == 1.0);
    CHECK(state.energy == doctest::Approx(brute_force_energy(state.field).total));
  }
  {
    const auto model = model_for(2, 2, 1, 0.5);
    ChainState state = init_chain(model, 6);
    // Site moves desynchronise the coefficients; the move must re-analyse.
    metropolis_site_sweep(state, model, schedule);
    const Eigen::RowVectorXd mean = state.field.values.colwise().mean();
    for (int k = 0; k < 50; ++k) pcn_global_move(state, model, schedule);
    CHECK(state.global.proposed == 50);
    CHECK((state.field.values.colwise().mean() - mean).norm() < 1e-9);
    CHECK(state.energy == doctest::Approx(brute_force_energy(state.field).total));
  }
}

TEST_CASE("run_chain records the schedule and is deterministic") {
  const auto model = model_for(2, 2, 1, 1.0);
  McmcSchedule schedule;
  schedule.n_sweeps = 600;
  schedule.burn_in = 200;
  schedule.thinning = 4;
  schedule.global_every = 5;
  const auto a = run_chain(model, schedule, 77);
  const auto b = run_chain(model, schedule, 77);
  const auto c = run_chain(model, schedule, 78);
  REQUIRE(a.rows.size() == 100);
  CHECK(a.rows.front().sweep == 204);
  CHECK(a.rows.back().sweep == 600);
  CHECK(a.column("energy") == b.column("energy"));
  CHECK(a.column("radius") == b.column("radius"));
  CHECK(a.column("radius") != c.column("radius"));
  CHECK(a.final_sigma_site == b.final_sigma_site);
  CHECK(a.max_resync_divergence < 1e-9);
  CHECK_THROWS_AS(a.column("nope"), UsageError);
}

TEST_CASE("step size tuning targets 0.35 acceptance") {
  const auto model = model_for(3, 2, 1, 1.0);
  McmcSchedule schedule;
  schedule.n_sweeps = 3000;
  schedule.burn_in = 1000;
  schedule.sigma_site = 5.0;
  const auto trace = run_chain(model, schedule, 9);
  CHECK(trace.site.rate() == doctest::Approx(0.35).epsilon(0.25));
  CHECK(trace.final_sigma_site < 5.0);
}

TEST_CASE("vanishing proposal step is almost always accepted") {
  const auto model = model_for(2, 2, 1, 1.0);
  McmcSchedule schedule;
  schedule.n_sweeps = 50;
  schedule.burn_in = 0;
  schedule.sigma_site = 1e-7;
  schedule.tune_sigma = false;
  CHECK(run_chain(model, schedule, 1).site.rate() > 0.999);
}

TEST_CASE("observers add columns; a throwing observer aborts the run") {
  const auto model = model_for(2, 2, 1, 0.0);
  McmcSchedule schedule;
  schedule.n_sweeps = 300;
  schedule.burn_in = 100;
  const std::vector<Observer> ok{{"brute", [](const ChainState& s) { return brute_force_energy(s.field).total; }}};
  const auto trace = run_chain(model, schedule, 2, ok);
  const auto brute = trace.column("brute");
  const auto energy = trace.column("energy");
  for (std::size_t i = 0; i < brute.size(); ++i) CHECK(std::abs(brute[i] - energy[i]) < 1e-9);

  long calls = 0;
  const std::vector<Observer> bad{{"boom", [&calls](const ChainState&) -> double {
                                     if (++calls == 10) throw std::runtime_error("observer failed");
                                     return 0.0;
                                   }}};
  const auto aborted = run_chain(model, schedule, 2, bad);
  CHECK(aborted.aborted);
  CHECK(aborted.rows.size() == 9);
  CHECK(aborted.abort_message == "observer failed");
  CHECK(diagnostics(aborted).low_confidence);
}

TEST_CASE("integrated autocorrelation time of AR(1)") {
  const auto xs = ar1(0.9, 200000, 1);
  CHECK(integrated_autocorrelation_time(xs) == doctest::Approx(19.0).epsilon(0.25));
  const auto s = summarize_series(xs);
  CHECK(s.ess == doctest::Approx(200000.0 / 19.0).epsilon(0.25));
  CHECK_FALSE(s.low_confidence);
}

TEST_CASE("white noise has ESS close to n") {
  const auto xs = ar1(0.0, 20000, 2);
  const auto s = summarize_series(xs);
  CHECK(s.ess == doctest::Approx(20000.0).epsilon(0.1));
  CHECK(s.std_error == doctest::Approx(std::sqrt(s.variance / 20000.0)).epsilon(0.06));
}

TEST_CASE("series summary edge cases") {
  CHECK_THROWS_AS(summarize_series({}), UsageError);
  const auto flat = summarize_series(std::vector<double>(50, 2.5));
  CHECK(flat.degenerate);
  CHECK(flat.ess == 0.0);
  CHECK(flat.mean == 2.5);
  const auto single = summarize_series({1.0});
  CHECK(single.degenerate);
  const auto sticky = summarize_series(ar1(0.999, 200, 3));
  CHECK(sticky.low_confidence);
  CHECK(integrated_autocorrelation_time({1.0}) == 1.0);
}
