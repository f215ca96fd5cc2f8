#include "manifold/gff.hpp"

#include <cmath>
#include <string>

namespace manifold {

void ModelParams::validate() const {
  if (!(beta > 0.0)) throw UsageError("beta must be > 0");
  if (!(gamma >= 0.0)) throw UsageError("gamma must be >= 0");
  if (!(drift_a >= 0.0)) throw UsageError("drift amplitude must be >= 0");
  if (range_dim < 1 || range_dim > shape.dim()) {
    throw UsageError("range dimension D=" + std::to_string(range_dim) + " must satisfy 1 <= D <= d=" +
                     std::to_string(shape.dim()));
  }
}

DriftCoefficients drift_coefficients(const Spectrum1D<double>& spec, int dim) {
  if (dim < 1) throw UsageError("dimension must be >= 1");
  const int n = spec.size();
  const double phi0 = spec.basis(0, 0);
  const double scale = std::pow(phi0, 1 - dim);
  DriftCoefficients drift;
  drift.alpha = VectorX<double>::Zero(n);
  for (int j = 1; j < n; ++j) {
    double sum = 0.0;
    for (int x = -spec.half_width; x <= spec.half_width; ++x) sum += x * spec.phi(j, x);
    drift.alpha(j) = scale * sum;
  }
  return drift;
}

GffModel::GffModel(ModelParams params)
    : params_(std::move(params)), spectrum_(build_spectrum_1d<double>(params_.shape.half_width())) {
  params_.validate();
  lambda_ = manifold::mode_eigenvalues(spectrum_, params_.shape);
  stddev_ = (2.0 * params_.beta * lambda_.array()).rsqrt().matrix();
  drift_ = drift_coefficients(spectrum_, params_.shape.dim());
}

SpectralCoefficients<double> sample_coefficients(const GffModel& model, Rng& rng) {
  std::normal_distribution<double> normal;
  const auto& sd = model.mode_stddev();
  SpectralCoefficients<double> coeffs;
  coeffs.values.resize(sd.size(), model.range_dim());
  for (Index i = 0; i < coeffs.values.cols(); ++i) {
    for (Index k = 0; k < sd.size(); ++k) coeffs.values(k, i) = sd(k) * normal(rng);
  }
  return coeffs;
}

PriorSample sample_prior(const GffModel& model, Rng& rng) {
  PriorSample s{sample_coefficients(model, rng), {}};
  s.field = synthesize(s.coeffs, model.spectrum(), model.shape());
  return s;
}

FieldConfiguration<double> apply_drift(const FieldConfiguration<double>& field, const LatticeShape& shape,
                                       double a) {
  if (field.sites() != shape.total_sites()) throw UsageError("field size does not match shape");
  if (field.range_dim() > shape.dim()) throw UsageError("range dimension exceeds domain dimension");
  FieldConfiguration<double> out = field;
  if (a == 0.0) return out;
  for (Index i = 0; i < out.range_dim(); ++i) {
    for (Index s = 0; s < out.sites(); ++s) out.values(s, i) += a * shape.coordinate(s, static_cast<int>(i));
  }
  return out;
}

double log_rn_derivative(const SpectralCoefficients<double>& coeffs, const DriftCoefficients& drift,
                         const GffModel& model, double a) {
  if (coeffs.values.rows() != model.shape().basis_size() || coeffs.range_dim() != model.range_dim()) {
    throw UsageError("coefficient block does not match model");
  }
  if (a == 0.0) return 0.0;
  const auto& spec = model.spectrum();
  const double beta = model.params().beta;
  double log_density = 0.0;
  for (int i = 0; i < model.range_dim(); ++i) {
    for (int j = 1; j < spec.size(); ++j) {
      const double shift = a * drift.alpha(j);
      const double x = coeffs.values(model.axis_mode_row(i, j), i);
      log_density -= (2.0 * shift * x + shift * shift) * beta * spec.eigenvalues(j);
    }
  }
  return log_density;
}

PairVariance pair_difference_variance(Index z, Index w, int component, const GffModel& model) {
  const auto& shape = model.shape();
  if (component < 0 || component >= model.range_dim()) throw UsageError("component out of range");
  if (z < 0 || w < 0 || z >= shape.total_sites() || w >= shape.total_sites()) throw UsageError("site out of range");
  if (z == w) return {0.0, true};

  const auto& basis = model.spectrum().basis;
  const auto& lambda = model.mode_eigenvalues();
  const int d = shape.dim();
  std::vector<int> zi(static_cast<std::size_t>(d)), wi(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    zi[static_cast<std::size_t>(a)] = shape.axis_index(z, a);
    wi[static_cast<std::size_t>(a)] = shape.axis_index(w, a);
  }
  double sum = 0.0;
  for (Index f = 1; f < shape.total_sites(); ++f) {
    double pz = 1.0;
    double pw = 1.0;
    for (int a = 0; a < d; ++a) {
      const int k = shape.axis_index(f, a);
      pz *= basis(zi[static_cast<std::size_t>(a)], k);
      pw *= basis(wi[static_cast<std::size_t>(a)], k);
    }
    sum += (pz - pw) * (pz - pw) / lambda(f - 1);
  }
  return {sum / (2.0 * model.params().beta), false};
}

double hamiltonian(const FieldConfiguration<double>& field, const LatticeShape& shape) {
  if (field.sites() != shape.total_sites()) throw UsageError("field size does not match shape");
  double h = 0.0;
  for (Index s = 0; s < field.sites(); ++s) {
    for (int a = 0; a < shape.dim(); ++a) {
      if (shape.coordinate(s, a) == shape.half_width()) continue;
      h += (field.values.row(s) - field.values.row(s + shape.stride(a))).squaredNorm();
    }
  }
  return h;
}

}  // namespace manifold
