#include "manifold/bounds.hpp"

#include <cmath>
#include <string>

#include "manifold/local_time.hpp"
#include "manifold/parallel.hpp"
#include "manifold/stats.hpp"

namespace manifold {

namespace {

constexpr long kBatchSize = 250;

/// Splits n_samples into fixed batches seeded by split_seed(seed, batch).
template <typename F>
RunningStats batched(long n_samples, std::uint64_t seed, int jobs, F&& per_sample) {
  const auto batches = static_cast<std::size_t>((n_samples + kBatchSize - 1) / kBatchSize);
  std::vector<RunningStats> partial(batches);
  parallel_for(batches, jobs, [&](std::size_t b) {
    Rng rng(split_seed(seed, b));
    const long begin = static_cast<long>(b) * kBatchSize;
    const long end = std::min(n_samples, begin + kBatchSize);
    for (long i = begin; i < end; ++i) partial[b].push(per_sample(rng));
  });
  RunningStats total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace

double i2_exact(const GffModel& model, double a) {
  const auto& spec = model.spectrum();
  const auto& alpha = model.drift().alpha;
  double sum = 0.0;
  for (int j = 1; j < spec.size(); ++j) sum += alpha(j) * alpha(j) * spec.eigenvalues(j);
  return model.range_dim() * model.params().beta * a * a * sum;
}

double expected_y_exact(int j, const GffModel& model, double a) {
  if (j == 0) throw UsageError("mode j = 0 is degenerate (alpha_0 = 0)");
  if (j < 0 || j >= model.spectrum().size()) throw UsageError("mode j out of range");
  const double shift = a * model.drift().alpha(j);
  return -model.params().beta * shift * shift * model.spectrum().eigenvalues(j);
}

double y_variable(int j, int component, const SpectralCoefficients<double>& coeffs, const GffModel& model, double a) {
  const double shift = a * model.drift().alpha(j);
  const double x = coeffs.values(model.axis_mode_row(component, j), component);
  return (2.0 * shift * x + shift * shift) * model.params().beta * model.spectrum().eigenvalues(j);
}

Estimate expected_y_monte_carlo(int j, const GffModel& model, double a, long n_samples, std::uint64_t seed) {
  if (j <= 0 || j >= model.spectrum().size()) throw UsageError("mode j out of range");
  const auto stats = batched(n_samples, seed, 1, [&](Rng& rng) {
    auto coeffs = sample_coefficients(model, rng);
    for (int l = 1; l < model.spectrum().size(); ++l) {
      coeffs.values(model.axis_mode_row(0, l), 0) -= a * model.drift().alpha(l);
    }
    return y_variable(j, 0, coeffs, model, a);
  });
  return {stats.mean, stats.std_error(), stats.n};
}

CoefficientSum coefficient_sum(const Spectrum1D<double>& spec, int dim) {
  const auto drift = drift_coefficients(spec, dim);
  CoefficientSum out;
  for (int j = 1; j < spec.size(); ++j) out.sum += drift.alpha(j) * drift.alpha(j) * spec.eigenvalues(j);
  out.ratio = out.sum / std::pow(static_cast<double>(spec.half_width), dim);
  return out;
}

Estimate i1_monte_carlo(const GffModel& model, double a, long n_samples, std::uint64_t seed, int jobs) {
  if (n_samples < 100) throw UsageError("i1_monte_carlo needs at least 100 samples");
  const double gamma = model.params().gamma;
  if (gamma == 0.0) return {0.0, 0.0, n_samples};
  const auto stats = batched(n_samples, seed, jobs, [&](Rng& rng) {
    const auto field = apply_drift(sample_prior(model, rng).field, model.shape(), a);
    return gamma * self_intersection_energy(field).total;
  });
  return {stats.mean, stats.std_error(), stats.n};
}

Estimate direct_log_z(const GffModel& model, long n_samples, std::uint64_t seed, int jobs) {
  const double gamma = model.params().gamma;
  const double floor = static_cast<double>(model.shape().total_sites());
  // exp(-gamma (Phi - M)) stays in [0, 1]; the diagonal M is added back below.
  const auto stats = batched(n_samples, seed, jobs, [&](Rng& rng) {
    const auto field = sample_prior(model, rng).field;
    return std::exp(-gamma * (self_intersection_energy(field).total - floor));
  });
  return {std::log(stats.mean) - gamma * floor, stats.std_error() / stats.mean, stats.n};
}

double optimal_drift(const ModelParams& params) {
  const double n = params.shape.half_width();
  const int d = params.shape.dim();
  const int big_d = params.range_dim;
  if (d == 2 && big_d == 1) return std::cbrt(n * std::log(n)) / std::sqrt(params.beta);
  return std::pow(n, static_cast<double>(d - big_d) / (big_d + 2.0)) / std::sqrt(params.beta);
}

double predicted_log_z_rate(const ModelParams& params) {
  const double n = params.shape.half_width();
  const int d = params.shape.dim();
  const int big_d = params.range_dim;
  const double scale = params.beta + params.gamma;
  if (d == 2 && big_d == 1) return scale * std::pow(n, 8.0 / 3.0) * std::pow(std::log(n), 2.0 / 3.0);
  return scale * std::pow(n, d + 2.0 * (d - big_d) / (big_d + 2.0));
}

JensenReport jensen_lower_bound(const GffModel& model, DriftChoice drift, long n_samples, std::uint64_t seed,
                                int jobs) {
  JensenReport r;
  r.a = drift.optimal ? optimal_drift(model.params()) : drift.a;
  if (!(r.a >= 0.0)) throw UsageError("drift amplitude must be >= 0");
  r.i1 = i1_monte_carlo(model, r.a, n_samples, seed, jobs);
  r.i2_exact = i2_exact(model, r.a);
  r.log_z_lower = -(r.i1.value + r.i2_exact);
  r.predicted_rate = predicted_log_z_rate(model.params());
  return r;
}

}  // namespace manifold
