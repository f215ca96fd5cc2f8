#pragma once

// Computable pieces of the Jensen lower bound on log Z:
//   log Z >= -(I1 + I2),  I1 = gamma E^(a)[Phi],  I2 = -sum_{i,j} E^(a)[Y_{j e_i}],
// with the drift tilt P^(a) and Y as in the Radon-Nikodym factor of gff.hpp.

#include <cstdint>

#include "manifold/gff.hpp"

namespace manifold {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// I2 = D beta a^2 sum_{j != 0} alpha_j^2 lambda_j.
double i2_exact(const GffModel& model, double a);

/// E^(a)[Y_{j e_1}] = -beta (a alpha_j)^2 lambda_j, for 1D modes j = 1..2N.
double expected_y_exact(int j, const GffModel& model, double a);

/// Y_{j e_i}^(i) = (2 a alpha_j X_{j e_i} + (a alpha_j)^2) beta lambda_j.
double y_variable(int j, int component, const SpectralCoefficients<double>& coeffs, const GffModel& model, double a);

/// Monte Carlo estimate of E^(a)[Y_{j e_1}]: prior samples with the axis
/// coefficients shifted by -a alpha_j.
Estimate expected_y_monte_carlo(int j, const GffModel& model, double a, long n_samples, std::uint64_t seed);

struct CoefficientSum {
  double sum = 0.0;    // sum_{j != 0} alpha_j^2 lambda_j
  double ratio = 0.0;  // sum / N^d
};

CoefficientSum coefficient_sum(const Spectrum1D<double>& spec, int dim);

/// gamma * E^(a)[Phi] from prior fields with drift a x_i added.
/// Batches of fixed size use split seeds, so the result does not depend on `jobs`.
Estimate i1_monte_carlo(const GffModel& model, double a, long n_samples, std::uint64_t seed, int jobs = 1);

/// log E_P[exp(-gamma Phi)] by plain Monte Carlo; exponentially costly in the
/// number of sites, intended for toy lattices.
Estimate direct_log_z(const GffModel& model, long n_samples, std::uint64_t seed, int jobs = 1);

/// beta^-1/2 (N log N)^1/3 for d = 2, D = 1; beta^-1/2 N^((d-D)/(D+2)) otherwise.
double optimal_drift(const ModelParams& params);

/// (beta + gamma) N^(8/3) (log N)^(2/3) for d = 2, D = 1;
/// (beta + gamma) N^(d + 2(d-D)/(D+2)) otherwise.
double predicted_log_z_rate(const ModelParams& params);

struct DriftChoice {
  bool optimal = true;
  double a = 0.0;  // used when !optimal
};

struct JensenReport {
  double a = 0.0;
  Estimate i1;
  double i2_exact = 0.0;
  double log_z_lower = 0.0;  // -(I1 + I2)
  double predicted_rate = 0.0;
};

JensenReport jensen_lower_bound(const GffModel& model, DriftChoice drift, long n_samples, std::uint64_t seed,
                                int jobs = 1);

}  // namespace manifold
