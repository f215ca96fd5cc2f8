#pragma once

// Gaussian prior on the non-constant Neumann modes, the linear drift tilt and
// the exact Gaussian quantities built from the spectrum.

#include <Eigen/Dense>

#include "manifold/lattice_spectral.hpp"
#include "manifold/random.hpp"

namespace manifold {

struct ModelParams {
  LatticeShape shape{1, 1};
  int range_dim = 1;    // D
  double beta = 1.0;    // inverse temperature
  double gamma = 0.0;   // repulsion strength
  double drift_a = 0.0;

  /// Throws UsageError unless beta > 0, gamma >= 0, drift_a >= 0, 1 <= D <= d.
  void validate() const;
};

/// Coefficients of f(x) = x in the 1D basis, scaled by phi_0^(1-d) so that
/// x_i = sum_j alpha_j phi_{j e_i}(x) on the d-dimensional box.
/// Indexed by 1D mode number; alpha(0) = 0.
struct DriftCoefficients {
  VectorX<double> alpha;
};

DriftCoefficients drift_coefficients(const Spectrum1D<double>& spec, int dim);

/// Spectral data derived once from ModelParams and shared by the samplers.
class GffModel {
 public:
  explicit GffModel(ModelParams params);

  const ModelParams& params() const { return params_; }
  const LatticeShape& shape() const { return params_.shape; }
  int range_dim() const { return params_.range_dim; }
  const Spectrum1D<double>& spectrum() const { return spectrum_; }
  /// lambda_k for flat modes 1.., aligned with coefficient rows.
  const VectorX<double>& mode_eigenvalues() const { return lambda_; }
  /// Prior standard deviation (2 beta lambda_k)^(-1/2) per coefficient row.
  const VectorX<double>& mode_stddev() const { return stddev_; }
  const DriftCoefficients& drift() const { return drift_; }

  /// Coefficient row of the axis mode j e_axis (j = 1..2N).
  Index axis_mode_row(int axis, int j) const { return static_cast<Index>(j) * shape().stride(axis) - 1; }

 private:
  ModelParams params_;
  Spectrum1D<double> spectrum_;
  VectorX<double> lambda_;
  VectorX<double> stddev_;
  DriftCoefficients drift_;
};

struct PriorSample {
  SpectralCoefficients<double> coeffs;
  FieldConfiguration<double> field;
};

/// Independent X_k^(i) ~ N(0, (2 beta lambda_k)^-1). gamma is ignored.
SpectralCoefficients<double> sample_coefficients(const GffModel& model, Rng& rng);
PriorSample sample_prior(const GffModel& model, Rng& rng);

/// Adds a * x_i to component i at every site.
FieldConfiguration<double> apply_drift(const FieldConfiguration<double>& field, const LatticeShape& shape, double a);

/// log dP^(a)/dP = -sum_i sum_{j != 0} (2 a alpha_j X_{j e_i} + (a alpha_j)^2) beta lambda_j.
/// Under this density the axis coefficients X_{j e_i} have mean -a alpha_j.
double log_rn_derivative(const SpectralCoefficients<double>& coeffs, const DriftCoefficients& drift,
                         const GffModel& model, double a);

struct PairVariance {
  double value = 0.0;
  bool degenerate = false;  // z == w
};

/// Var(u^(i)(z) - u^(i)(w)) = (2 beta)^-1 sum_{k != 0} lambda_k^-1 (phi_k(z) - phi_k(w))^2.
PairVariance pair_difference_variance(Index z, Index w, int component, const GffModel& model);

/// H(u) = sum over nearest-neighbour edges of |u(x) - u(y)|^2, each edge once.
double hamiltonian(const FieldConfiguration<double>& field, const LatticeShape& shape);

}  // namespace manifold
