#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "manifold/gff.hpp"
#include "manifold/stats.hpp"

using namespace manifold;

namespace {

ModelParams make(int n, int d, int range_dim = 1, double beta = 1.0) {
  ModelParams p;
  p.shape = LatticeShape(n, d);
  p.range_dim = range_dim;
  p.beta = beta;
  return p;
}

}  // namespace

TEST_CASE("model parameter validation") {
  auto p = make(2, 2);
  CHECK_NOTHROW(p.validate());
  p.beta = 0.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = make(2, 2);
  p.gamma = -1.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = make(2, 2, 3);
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = make(2, 2, 0);
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = make(2, 2);
  p.drift_a = -0.1;
  CHECK_THROWS_AS(p.validate(), UsageError);
  CHECK_THROWS_AS(GffModel(make(2, 2, 3)), UsageError);
}

TEST_CASE("drift coefficients reproduce the coordinate function") {
  for (int d = 1; d <= 3; ++d) {
    const GffModel model(make(3, d, 1));
    const auto& shape = model.shape();
    for (int axis = 0; axis < d; ++axis) {
      SpectralCoefficients<double> c{MatrixX<double>::Zero(shape.basis_size(), 1)};
      for (int j = 1; j <= 6; ++j) c.values(model.axis_mode_row(axis, j), 0) = model.drift().alpha(j);
      const auto f = synthesize(c, model.spectrum(), shape);
      for (Index s = 0; s < shape.total_sites(); ++s) CHECK(f.values(s, 0) == doctest::Approx(shape.coordinate(s, axis)));
    }
  }
}

TEST_CASE("drift coefficients: alpha_0 = 0, even modes vanish, weighted Parseval") {
  for (int d : {1, 2, 3}) {
    const int n = 4;
    const auto spec = build_spectrum_1d<double>(n);
    const auto alpha = drift_coefficients(spec, d).alpha;
    CHECK(alpha(0) == 0.0);
    for (int j = 2; j <= 2 * n; j += 2) CHECK(std::abs(alpha(j)) < 1e-12);
    const double phi0 = spec.phi(0, 0);
    double weighted = 0.0;
    for (int j = 1; j <= 2 * n; ++j) weighted += alpha(j) * alpha(j) * std::pow(phi0, 2 * (d - 1));
    CHECK(weighted == doctest::Approx(2.0 * (1 + 4 + 9 + 16)));
  }
}

TEST_CASE("Hamiltonian equals the Laplacian quadratic form") {
  const GffModel model(make(2, 2, 2));
  Rng rng(11);
  const auto sample = sample_prior(model, rng);
  const auto lap = dense_laplacian<double>(model.shape());
  const double dense = (sample.field.values.transpose() * lap * sample.field.values).trace();
  CHECK(hamiltonian(sample.field, model.shape()) == doctest::Approx(dense).epsilon(1e-12));
  // Spectral form: H = sum_k lambda_k |X_k|^2.
  const double spectral = (model.mode_eigenvalues().asDiagonal() * sample.coeffs.values.cwiseAbs2()).sum();
  CHECK(hamiltonian(sample.field, model.shape()) == doctest::Approx(spectral).epsilon(1e-12));
}

TEST_CASE("Hamiltonian of a linear field counts each edge once") {
  const LatticeShape shape(2, 2);
  FieldConfiguration<double> f{MatrixX<double>::Zero(shape.total_sites(), 1)};
  for (Index s = 0; s < shape.total_sites(); ++s) f.values(s, 0) = shape.coordinate(s, 0);
  CHECK(hamiltonian(f, shape) == doctest::Approx(20.0));  // 4 unit steps x 5 rows
  FieldConfiguration<double> wrong{MatrixX<double>::Zero(3, 1)};
  CHECK_THROWS_AS(hamiltonian(wrong, shape), UsageError);
}

TEST_CASE("pair difference variance matches the Laplacian pseudo-inverse") {
  const double beta = 1.7;
  for (int d : {1, 2, 3}) {
    const GffModel model(make(2, d, 1, beta));
    const auto lap = dense_laplacian<double>(model.shape());
    const Eigen::CompleteOrthogonalDecomposition<MatrixX<double>> cod(lap);
    const MatrixX<double> pinv = cod.pseudoInverse();
    const Index m = model.shape().total_sites();
    for (Index z = 0; z < m; z += 3) {
      for (Index w = 1; w < m; w += 5) {
        if (z == w) continue;
        const double oracle = (pinv(z, z) + pinv(w, w) - 2.0 * pinv(z, w)) / (2.0 * beta);
        const auto v = pair_difference_variance(z, w, 0, model);
        CHECK_FALSE(v.degenerate);
        CHECK(v.value == doctest::Approx(oracle).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("pair difference variance edge cases") {
  const GffModel model(make(2, 2, 2));
  const auto same = pair_difference_variance(4, 4, 0, model);
  CHECK(same.degenerate);
  CHECK(same.value == 0.0);
  // Components are identically distributed.
  CHECK(pair_difference_variance(0, 24, 0, model).value == doctest::Approx(pair_difference_variance(0, 24, 1, model).value));
  CHECK_THROWS_AS(pair_difference_variance(0, 25, 0, model), UsageError);
  CHECK_THROWS_AS(pair_difference_variance(0, 1, 2, model), UsageError);
  CHECK_THROWS_AS(pair_difference_variance(-1, 1, 0, model), UsageError);
}

TEST_CASE("prior samples: mean zero, coefficient variances (2 beta lambda)^-1") {
  const GffModel model(make(2, 2, 1, 2.0));
  Rng rng(5);
  const Index rows = model.shape().basis_size();
  std::vector<RunningStats> stats(static_cast<std::size_t>(rows));
  for (int s = 0; s < 20000; ++s) {
    const auto sample = sample_prior(model, rng);
    CHECK(std::abs(sample.field.values.sum()) < 1e-9);
    for (Index r = 0; r < rows; ++r) stats[static_cast<std::size_t>(r)].push(sample.coeffs.values(r, 0));
  }
  for (Index r = 0; r < rows; ++r) {
    const double expected = 1.0 / (2.0 * 2.0 * model.mode_eigenvalues()(r));
    CHECK(stats[static_cast<std::size_t>(r)].variance() == doctest::Approx(expected).epsilon(0.06));
    CHECK(model.mode_stddev()(r) == doctest::Approx(std::sqrt(expected)));
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const GffModel model(make(3, 2, 2));
  Rng a(99), b(99), c(100);
  const auto x = sample_prior(model, a);
  const auto y = sample_prior(model, b);
  const auto z = sample_prior(model, c);
  CHECK(x.field.values == y.field.values);
  CHECK(x.field.values != z.field.values);
}

TEST_CASE("apply_drift adds a x_i per component") {
  const GffModel model(make(1, 2, 2));
  FieldConfiguration<double> zero{MatrixX<double>::Zero(9, 2)};
  const auto f = apply_drift(zero, model.shape(), 0.5);
  for (Index s = 0; s < 9; ++s) {
    CHECK(f.values(s, 0) == doctest::Approx(0.5 * model.shape().coordinate(s, 0)));
    CHECK(f.values(s, 1) == doctest::Approx(0.5 * model.shape().coordinate(s, 1)));
  }
  FieldConfiguration<double> too_wide{MatrixX<double>::Zero(9, 3)};
  CHECK_THROWS_AS(apply_drift(too_wide, model.shape(), 0.5), UsageError);
}

TEST_CASE("log RN derivative equals minus beta times the Hamiltonian increase") {
  for (int range_dim : {1, 2}) {
    const GffModel model(make(2, 2, range_dim, 1.3));
    Rng rng(8);
    const double a = 0.7;
    for (int t = 0; t < 5; ++t) {
      const auto sample = sample_prior(model, rng);
      const auto shifted = apply_drift(sample.field, model.shape(), a);
      const double direct = -model.params().beta *
                            (hamiltonian(shifted, model.shape()) - hamiltonian(sample.field, model.shape()));
      CHECK(log_rn_derivative(sample.coeffs, model.drift(), model, a) == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("log RN derivative at a = 0 vanishes") {
  const GffModel model(make(2, 2));
  Rng rng(1);
  CHECK(log_rn_derivative(sample_coefficients(model, rng), model.drift(), model, 0.0) == 0.0);
}
