#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <algorithm>

#include "manifold/mcmc.hpp"

namespace manifold {

namespace {

/// Normalised autocorrelation rho_0..rho_{n-1} via zero-padded FFT.
std::vector<double> autocorrelation(const std::vector<double>& series, double mean) {
  const std::size_t n = series.size();
  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<double> centred(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) centred[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centred);
  for (auto& c : spectrum) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spectrum);

  std::vector<double> rho(n);
  for (std::size_t t = 0; t < n; ++t) rho[t] = acov[t] / acov[0];
  return rho;
}

}  // namespace

double integrated_autocorrelation_time(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) return 1.0;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  if (var == 0.0) return 1.0;

  const auto rho = autocorrelation(series, mean);
  // Geyer: Gamma_k = rho_{2k} + rho_{2k+1}, summed while positive and
  // forced non-increasing.
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double gamma = rho[2 * k] + rho[2 * k + 1];
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, previous);
    previous = gamma;
    sum += gamma;
  }
  return std::max(2.0 * sum - 1.0, 1.0 / static_cast<double>(n));
}

SeriesSummary summarize_series(const std::vector<double>& series) {
  if (series.empty()) throw UsageError("cannot summarise an empty series");
  SeriesSummary s;
  s.n = static_cast<long>(series.size());
  for (double v : series) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  for (double v : series) s.variance += (v - s.mean) * (v - s.mean);
  s.variance = s.n > 1 ? s.variance / static_cast<double>(s.n - 1) : 0.0;

  if (s.variance <= 0.0) {
    s.degenerate = true;
    s.iat = 1.0;
    s.ess = 0.0;
    s.std_error = 0.0;
    s.low_confidence = true;
    return s;
  }
  s.iat = integrated_autocorrelation_time(series);
  s.ess = static_cast<double>(s.n) / s.iat;
  s.std_error = std::sqrt(s.variance / s.ess);
  s.low_confidence = static_cast<double>(s.n) < 10.0 * s.iat;
  return s;
}

ChainDiagnostics diagnostics(const Trace& trace) {
  if (trace.rows.empty()) throw UsageError("diagnostics need a non-empty trace");
  ChainDiagnostics d;
  d.energy = summarize_series(trace.column("energy"));
  d.radius = summarize_series(trace.column("radius"));
  for (const auto& name : trace.extra_names) d.extras.emplace_back(name, summarize_series(trace.column(name)));
  d.accept_site = trace.site.rate();
  d.accept_global = trace.global.rate();
  d.low_confidence = trace.aborted || (d.energy.low_confidence && !d.energy.degenerate) ||
                     (d.radius.low_confidence && !d.radius.degenerate);
  return d;
}

}  // namespace manifold
