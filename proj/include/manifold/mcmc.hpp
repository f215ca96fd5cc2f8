#pragma once

// Sampler for the penalised measure Q_N ~ exp(-gamma Phi(u)) dP_N.
//
// The kernel mixes single-site Gaussian random-walk Metropolis moves, scored
// with the nearest-neighbour Hamiltonian and the incremental energy change,
// with prior-preserving pCN moves on the spectral coefficients whose
// acceptance depends only on the change in Phi. Both leave Q_N invariant.
// The site moves also let the (energy-neutral) field mean drift; every
// observable here is translation invariant.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "manifold/gff.hpp"
#include "manifold/local_time.hpp"
#include "manifold/random.hpp"

namespace manifold {

struct McmcSchedule {
  long n_sweeps = 1000;
  long burn_in = 100;
  long thinning = 1;
  double sigma_site = 0.5;
  double pcn_s = 0.1;
  long global_every = 0;  // pCN move after every k-th sweep; 0 disables
  long resync_every = 100;
  bool site_moves = true;
  bool tune_sigma = true;  // adapt sigma_site during burn-in, frozen afterwards
  double target_accept = 0.35;

  void validate() const;
  bool operator==(const McmcSchedule&) const = default;
};

struct MoveCounter {
  long proposed = 0;
  long accepted = 0;

  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct ChainState {
  FieldConfiguration<double> field;
  SpectralCoefficients<double> coeffs;
  bool coeffs_synced = false;
  double energy = 0.0;  // cached Phi(field)
  bool energy_stale = false;  // gamma = 0 site moves skip the incremental update
  CellIndex<double> cells;
  Rng rng;
  double sigma_site = 0.5;
  long sweep = 0;
  MoveCounter site;
  MoveCounter global;
  double max_resync_divergence = 0.0;
};

/// Field drawn from P_N (gamma ignored); energy and cells consistent.
ChainState init_chain(const GffModel& model, std::uint64_t seed);

/// -beta dH - gamma dPhi for moving `site` to `proposal`. dPhi is returned
/// through `energy_change` when non-null.
double site_move_log_ratio(const ChainState& state, const GffModel& model, Index site,
                           const Point<double>& proposal, double* energy_change = nullptr);

/// Phi(after) - Phi(before) for a single-site move, using the chain's cell index.
double energy_delta_single_site(const ChainState& state, Index site, const Point<double>& new_value);

/// One random-order pass of single-site proposals u(x) + sigma zeta.
/// Returns the number of accepted moves.
long metropolis_site_sweep(ChainState& state, const GffModel& model, const McmcSchedule& schedule);

/// X' = sqrt(1 - s^2) X + s xi, xi ~ prior; accepted with min(1, exp(-gamma dPhi)).
bool pcn_global_move(ChainState& state, const GffModel& model, const McmcSchedule& schedule);

/// Recomputes Phi from scratch, rebuilds the cell index and returns the
/// divergence from the cached value (0 when the cache was stale).
double resync_energy(ChainState& state);

/// Cached Phi, recomputed first if stale.
double current_energy(ChainState& state);

struct Observer {
  std::string name;
  std::function<double(const ChainState&)> fn;
};

struct TraceRow {
  long sweep = 0;
  double energy = 0.0;
  double radius = 0.0;
  double accept_site = 0.0;    // acceptance rate since burn-in
  double accept_global = 0.0;  // acceptance rate since burn-in
  std::vector<double> extras;  // one per observer
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<std::string> extra_names;
  std::uint64_t seed = 0;
  double final_sigma_site = 0.0;
  double max_resync_divergence = 0.0;
  MoveCounter site;
  MoveCounter global;
  bool aborted = false;
  std::string abort_message;

  std::vector<double> column(const std::string& name) const;
};

/// Runs the schedule from init_chain(model, seed), recording after burn-in at
/// every `thinning` sweeps: (n_sweeps - burn_in) / thinning rows.
/// An observer that throws aborts the run; the partial trace is flagged.
Trace run_chain(const GffModel& model, const McmcSchedule& schedule, std::uint64_t seed,
                const std::vector<Observer>& observers = {});

struct SeriesSummary {
  long n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double iat = 1.0;  // integrated autocorrelation time
  double ess = 0.0;
  double std_error = 0.0;
  bool degenerate = false;      // zero variance
  bool low_confidence = false;  // fewer than 10 autocorrelation times
};

/// Integrated autocorrelation time, 1 + 2 sum_t rho_t, truncated by Geyer's
/// initial positive (monotone) sequence.
double integrated_autocorrelation_time(const std::vector<double>& series);

SeriesSummary summarize_series(const std::vector<double>& series);

struct ChainDiagnostics {
  SeriesSummary energy;
  SeriesSummary radius;
  std::vector<std::pair<std::string, SeriesSummary>> extras;
  double accept_site = 0.0;
  double accept_global = 0.0;
  bool low_confidence = false;
};

ChainDiagnostics diagnostics(const Trace& trace);

}  // namespace manifold
