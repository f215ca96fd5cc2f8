#include "manifold/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "manifold/observables.hpp"

namespace manifold {

void McmcSchedule::validate() const {
  if (n_sweeps < 1) throw UsageError("n_sweeps must be >= 1");
  if (burn_in < 0 || burn_in >= n_sweeps) throw UsageError("burn_in must satisfy 0 <= burn_in < n_sweeps");
  if (thinning < 1) throw UsageError("thinning must be >= 1");
  if (!(sigma_site > 0.0)) throw UsageError("sigma_site must be > 0");
  if (!(pcn_s >= 0.0 && pcn_s <= 1.0)) throw UsageError("pcn_s must lie in [0, 1]");
  if (global_every < 0) throw UsageError("global_every must be >= 0");
  if (resync_every < 0) throw UsageError("resync_every must be >= 0");
  if (!site_moves && global_every == 0) throw UsageError("schedule has no moves");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw UsageError("target_accept must lie in (0, 1)");
}

ChainState init_chain(const GffModel& model, std::uint64_t seed) {
  ChainState state;
  state.rng.seed(seed);
  auto prior = sample_prior(model, state.rng);
  state.coeffs = std::move(prior.coeffs);
  state.field = std::move(prior.field);
  state.coeffs_synced = true;
  state.cells.rebuild(state.field);
  state.energy = self_intersection_energy(state.field, state.cells).total;
  return state;
}

namespace {

/// Change of H when `site` moves to `proposal`; touches at most 2d edges.
double hamiltonian_delta(const ChainState& state, const LatticeShape& shape, Index site,
                         const Point<double>& proposal) {
  const auto& u = state.field.values;
  const Point<double> old_value = u.row(site);
  double delta = 0.0;
  for (int a = 0; a < shape.dim(); ++a) {
    const int x = shape.coordinate(site, a);
    const Index stride = shape.stride(a);
    if (x > -shape.half_width()) {
      const Point<double> nb = u.row(site - stride);
      delta += (proposal - nb).squaredNorm() - (old_value - nb).squaredNorm();
    }
    if (x < shape.half_width()) {
      const Point<double> nb = u.row(site + stride);
      delta += (proposal - nb).squaredNorm() - (old_value - nb).squaredNorm();
    }
  }
  return delta;
}

}  // namespace

double energy_delta_single_site(const ChainState& state, Index site, const Point<double>& new_value) {
  return manifold::energy_delta_single_site(state.field, state.cells, site, new_value);
}

double site_move_log_ratio(const ChainState& state, const GffModel& model, Index site,
                           const Point<double>& proposal, double* energy_change) {
  const auto& params = model.params();
  const double dh = hamiltonian_delta(state, model.shape(), site, proposal);
  const double dphi = energy_delta_single_site(state, site, proposal);
  if (energy_change != nullptr) *energy_change = dphi;
  return -params.beta * dh - params.gamma * dphi;
}

long metropolis_site_sweep(ChainState& state, const GffModel& model, const McmcSchedule& schedule) {
  (void)schedule;
  const Index m = state.field.sites();
  const Index dim = state.field.range_dim();
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), state.rng);

  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Point<double> proposal(dim);
  const bool penalised = model.params().gamma != 0.0;
  const double beta = model.params().beta;
  long accepted = 0;
  for (Index site : order) {
    for (Index i = 0; i < dim; ++i) proposal(i) = state.field.values(site, i) + state.sigma_site * normal(state.rng);
    double dphi = 0.0;
    const double log_ratio = penalised ? site_move_log_ratio(state, model, site, proposal, &dphi)
                                       : -beta * hamiltonian_delta(state, model.shape(), site, proposal);
    ++state.site.proposed;
    if (log_ratio >= 0.0 || std::log(uniform(state.rng)) < log_ratio) {
      state.field.values.row(site) = proposal;
      state.cells.move(site, proposal);
      if (penalised) {
        state.energy += dphi;
      } else {
        state.energy_stale = true;
      }
      ++state.site.accepted;
      ++accepted;
    }
  }
  if (accepted > 0) state.coeffs_synced = false;
  return accepted;
}

bool pcn_global_move(ChainState& state, const GffModel& model, const McmcSchedule& schedule) {
  const auto& spec = model.spectrum();
  const auto& shape = model.shape();
  if (!state.coeffs_synced) {
    state.coeffs = analyze(state.field, spec, shape);
    state.coeffs_synced = true;
  }
  const Eigen::RowVectorXd mean = state.field.values.colwise().mean();
  const double s = schedule.pcn_s;
  const SpectralCoefficients<double> xi = sample_coefficients(model, state.rng);
  SpectralCoefficients<double> proposal{std::sqrt(1.0 - s * s) * state.coeffs.values + s * xi.values};

  FieldConfiguration<double> field = synthesize(proposal, spec, shape);
  field.values.rowwise() += mean;
  CellIndex<double> cells(field);
  const double energy = self_intersection_energy(field, cells).total;

  ++state.global.proposed;
  const double gamma = model.params().gamma;
  const double log_ratio = gamma == 0.0 ? 0.0 : -gamma * (energy - current_energy(state));
  std::uniform_real_distribution<double> uniform;
  if (log_ratio >= 0.0 || std::log(uniform(state.rng)) < log_ratio) {
    state.field = std::move(field);
    state.coeffs = std::move(proposal);
    state.cells = std::move(cells);
    state.energy = energy;
    state.energy_stale = false;
    ++state.global.accepted;
    return true;
  }
  return false;
}

double resync_energy(ChainState& state) {
  state.cells.rebuild(state.field);
  const double fresh = self_intersection_energy(state.field, state.cells).total;
  const double divergence = state.energy_stale ? 0.0 : std::abs(fresh - state.energy);
  state.energy = fresh;
  state.energy_stale = false;
  state.max_resync_divergence = std::max(state.max_resync_divergence, divergence);
  return divergence;
}

double current_energy(ChainState& state) {
  if (state.energy_stale) resync_energy(state);
  return state.energy;
}

std::vector<double> Trace::column(const std::string& name) const {
  std::vector<double> out;
  out.reserve(rows.size());
  if (name == "energy" || name == "radius" || name == "accept_site" || name == "accept_global" || name == "sweep") {
    for (const auto& r : rows) {
      if (name == "energy") out.push_back(r.energy);
      if (name == "radius") out.push_back(r.radius);
      if (name == "accept_site") out.push_back(r.accept_site);
      if (name == "accept_global") out.push_back(r.accept_global);
      if (name == "sweep") out.push_back(static_cast<double>(r.sweep));
    }
    return out;
  }
  const auto it = std::find(extra_names.begin(), extra_names.end(), name);
  if (it == extra_names.end()) throw UsageError("trace has no column '" + name + "'");
  const auto col = static_cast<std::size_t>(it - extra_names.begin());
  for (const auto& r : rows) out.push_back(r.extras[col]);
  return out;
}

Trace run_chain(const GffModel& model, const McmcSchedule& schedule, std::uint64_t seed,
                const std::vector<Observer>& observers) {
  schedule.validate();
  ChainState state = init_chain(model, seed);
  state.sigma_site = schedule.sigma_site;

  Trace trace;
  trace.seed = seed;
  for (const auto& ob : observers) trace.extra_names.push_back(ob.name);
  trace.rows.reserve(static_cast<std::size_t>((schedule.n_sweeps - schedule.burn_in) / schedule.thinning));

  const double sites = static_cast<double>(state.field.sites());
  for (long sweep = 1; sweep <= schedule.n_sweeps; ++sweep) {
    state.sweep = sweep;
    if (schedule.site_moves) {
      const long accepted = metropolis_site_sweep(state, model, schedule);
      if (schedule.tune_sigma && sweep <= schedule.burn_in) {
        const double rate = static_cast<double>(accepted) / sites;
        const double gain = 1.0 / std::sqrt(1.0 + static_cast<double>(sweep) / 20.0);
        state.sigma_site *= std::exp(gain * (rate - schedule.target_accept));
      }
    }
    if (schedule.global_every > 0 && sweep % schedule.global_every == 0) pcn_global_move(state, model, schedule);
    if (schedule.resync_every > 0 && sweep % schedule.resync_every == 0) resync_energy(state);

    if (sweep == schedule.burn_in) {
      state.site = {};
      state.global = {};
    }
    if (sweep > schedule.burn_in && (sweep - schedule.burn_in) % schedule.thinning == 0) {
      TraceRow row;
      row.sweep = sweep;
      row.energy = current_energy(state);
      row.radius = effective_radius(state.field).effective;
      row.accept_site = state.site.rate();
      row.accept_global = state.global.rate();
      try {
        for (const auto& ob : observers) row.extras.push_back(ob.fn(state));
      } catch (const std::exception& e) {
        trace.aborted = true;
        trace.abort_message = e.what();
        break;
      }
      trace.rows.push_back(std::move(row));
    }
  }
  trace.final_sigma_site = state.sigma_site;
  trace.max_resync_divergence = state.max_resync_divergence;
  trace.site = state.site;
  trace.global = state.global;
  return trace;
}

}  // namespace manifold
