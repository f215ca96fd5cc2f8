#pragma once

// Neumann Laplacian eigenbasis on the box [-N, N]^d of Z^d and the separable
// transforms between spectral coefficients and real-space fields.
//
// Site enumeration is lexicographic with the last coordinate varying fastest:
// flat(x) = sum_a (x_a + N) * (2N+1)^(d-1-a). Mode tuples use the same layout
// with mode numbers 0..2N in place of x_a + N, so flat mode 0 is the constant
// eigenfunction.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "manifold/errors.hpp"

namespace manifold {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class LatticeShape {
 public:
  LatticeShape(int half_width, int dim) : half_width_(half_width), dim_(dim) {
    if (half_width < 1) throw UsageError("lattice half-width N must be >= 1");
    if (dim < 1) throw UsageError("lattice dimension d must be >= 1");
    strides_.assign(static_cast<std::size_t>(dim), 1);
    total_ = 1;
    for (int a = dim - 1; a >= 0; --a) {
      strides_[static_cast<std::size_t>(a)] = total_;
      total_ *= sites_per_axis();
      if (total_ > (Index{1} << 31)) throw UsageError("lattice too large");
    }
  }

  int half_width() const { return half_width_; }
  int dim() const { return dim_; }
  int sites_per_axis() const { return 2 * half_width_ + 1; }
  Index total_sites() const { return total_; }
  /// Number of non-constant eigenfunctions, (2N+1)^d - 1.
  Index basis_size() const { return total_ - 1; }

  /// Flat-index distance between neighbours along `axis`.
  Index stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  /// Position 0..2N along `axis` of a flat site or mode index.
  int axis_index(Index flat, int axis) const {
    return static_cast<int>((flat / stride(axis)) % sites_per_axis());
  }
  /// Lattice coordinate -N..N of `site` along `axis`.
  int coordinate(Index site, int axis) const { return axis_index(site, axis) - half_width_; }

  std::vector<int> coordinates(Index site) const {
    std::vector<int> x(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) x[static_cast<std::size_t>(a)] = coordinate(site, a);
    return x;
  }

  Index site_index(std::span<const int> coords) const {
    if (static_cast<int>(coords.size()) != dim_) {
      throw UsageError("site has " + std::to_string(coords.size()) + " coordinates, expected " +
                       std::to_string(dim_));
    }
    Index flat = 0;
    for (int a = 0; a < dim_; ++a) {
      const int x = coords[static_cast<std::size_t>(a)];
      if (x < -half_width_ || x > half_width_) throw UsageError("site coordinate out of range");
      flat += static_cast<Index>(x + half_width_) * stride(a);
    }
    return flat;
  }

  bool operator==(const LatticeShape& other) const {
    return half_width_ == other.half_width_ && dim_ == other.dim_;
  }

 private:
  int half_width_;
  int dim_;
  Index total_ = 1;
  std::vector<Index> strides_;
};

/// Mode numbers (k_1, ..., k_d), each in 0..2N. All zeros is the constant mode.
struct EigenIndex {
  std::vector<int> modes;

  bool is_constant() const {
    for (int k : modes) {
      if (k != 0) return false;
    }
    return true;
  }
};

inline EigenIndex mode_index(Index flat_mode, const LatticeShape& shape) {
  EigenIndex k;
  k.modes.resize(static_cast<std::size_t>(shape.dim()));
  for (int a = 0; a < shape.dim(); ++a) k.modes[static_cast<std::size_t>(a)] = shape.axis_index(flat_mode, a);
  return k;
}

inline Index flat_mode(const EigenIndex& k, const LatticeShape& shape) {
  if (static_cast<int>(k.modes.size()) != shape.dim()) throw UsageError("eigen index has wrong dimension");
  Index flat = 0;
  for (int a = 0; a < shape.dim(); ++a) {
    const int m = k.modes[static_cast<std::size_t>(a)];
    if (m < 0 || m >= shape.sites_per_axis()) throw UsageError("mode number out of range");
    flat += static_cast<Index>(m) * shape.stride(a);
  }
  return flat;
}

/// Eigenpairs of the path-graph Laplacian on {-N..N} with free ends.
/// lambda_k = 2 - 2 cos(pi k / (2N+1)),
/// phi_k(x) = c_k cos(pi k (x + N + 1/2) / (2N+1)).
template <typename Scalar = double>
struct Spectrum1D {
  int half_width = 0;
  VectorX<Scalar> eigenvalues;  // indexed by mode number
  MatrixX<Scalar> basis;        // basis(x + N, k) = phi_k(x)

  int size() const { return 2 * half_width + 1; }
  Scalar phi(int k, int x) const { return basis(x + half_width, k); }
};

template <typename Scalar = double>
Spectrum1D<Scalar> build_spectrum_1d(int half_width) {
  if (half_width < 1) throw UsageError("spectrum requires N >= 1");
  using std::cos;
  using std::sqrt;
  const int n = 2 * half_width + 1;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Spectrum1D<Scalar> s;
  s.half_width = half_width;
  s.eigenvalues.resize(n);
  s.basis.resize(n, n);
  const Scalar c0 = Scalar(1) / sqrt(Scalar(n));
  const Scalar ck = sqrt(Scalar(2) / Scalar(n));
  for (int k = 0; k < n; ++k) {
    s.eigenvalues(k) = k == 0 ? Scalar(0) : Scalar(2) - Scalar(2) * cos(pi * Scalar(k) / Scalar(n));
    for (int i = 0; i < n; ++i) {
      s.basis(i, k) = k == 0 ? c0 : ck * cos(pi * Scalar(k) * (Scalar(i) + Scalar(0.5)) / Scalar(n));
    }
  }
  return s;
}

/// lambda_k = sum_i lambda_{k_i}.
template <typename Scalar>
Scalar eigenvalue_product(const EigenIndex& k, const Spectrum1D<Scalar>& spec, const LatticeShape& shape) {
  if (spec.half_width != shape.half_width()) throw UsageError("spectrum and shape disagree on N");
  flat_mode(k, shape);  // validates
  Scalar sum(0);
  for (int m : k.modes) sum += spec.eigenvalues(m);
  return sum;
}

/// Eigenvalues of all non-constant modes, in flat mode order 1..(2N+1)^d - 1.
template <typename Scalar>
VectorX<Scalar> mode_eigenvalues(const Spectrum1D<Scalar>& spec, const LatticeShape& shape) {
  VectorX<Scalar> lambda(shape.basis_size());
  for (Index f = 1; f < shape.total_sites(); ++f) {
    Scalar sum(0);
    for (int a = 0; a < shape.dim(); ++a) sum += spec.eigenvalues(shape.axis_index(f, a));
    lambda(f - 1) = sum;
  }
  return lambda;
}

/// Coefficients X_k^(i): one row per non-constant mode (flat mode f at row
/// f - 1), one column per range component.
template <typename Scalar = double>
struct SpectralCoefficients {
  MatrixX<Scalar> values;

  Index range_dim() const { return values.cols(); }
};

/// Real-space embedding u^(i)(x): one row per site, one column per component.
template <typename Scalar = double>
struct FieldConfiguration {
  MatrixX<Scalar> values;

  Index sites() const { return values.rows(); }
  Index range_dim() const { return values.cols(); }
};

namespace detail {

/// Applies `op` (n x n) along every lattice axis of each column of `data`.
template <typename Scalar>
void apply_along_axes(MatrixX<Scalar>& data, const MatrixX<Scalar>& op, const LatticeShape& shape) {
  using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index n = shape.sites_per_axis();
  for (Index c = 0; c < data.cols(); ++c) {
    Scalar* column = data.col(c).data();
    for (int axis = 0; axis < shape.dim(); ++axis) {
      const Index inner = shape.stride(axis);
      const Index outer = shape.total_sites() / (n * inner);
      for (Index o = 0; o < outer; ++o) {
        Eigen::Map<Block> block(column + o * n * inner, n, inner);
        block = op * block;
      }
    }
  }
}

}  // namespace detail

/// u^(i)(x) = sum_k X_k^(i) prod_j phi_{k_j}(x_j), evaluated axis by axis.
template <typename Scalar>
FieldConfiguration<Scalar> synthesize(const SpectralCoefficients<Scalar>& coeffs, const Spectrum1D<Scalar>& spec,
                                      const LatticeShape& shape) {
  if (spec.half_width != shape.half_width()) throw UsageError("spectrum and shape disagree on N");
  if (coeffs.values.rows() != shape.basis_size()) {
    throw UsageError("coefficient block has " + std::to_string(coeffs.values.rows()) + " rows, expected " +
                     std::to_string(shape.basis_size()));
  }
  FieldConfiguration<Scalar> field;
  field.values.resize(shape.total_sites(), coeffs.values.cols());
  field.values.row(0).setZero();
  field.values.bottomRows(shape.basis_size()) = coeffs.values;
  detail::apply_along_axes(field.values, spec.basis, shape);
  return field;
}

/// Projection onto the non-constant modes; inverse of synthesize on mean-zero fields.
template <typename Scalar>
SpectralCoefficients<Scalar> analyze(const FieldConfiguration<Scalar>& field, const Spectrum1D<Scalar>& spec,
                                     const LatticeShape& shape) {
  if (spec.half_width != shape.half_width()) throw UsageError("spectrum and shape disagree on N");
  if (field.values.rows() != shape.total_sites()) {
    throw UsageError("field has " + std::to_string(field.values.rows()) + " sites, expected " +
                     std::to_string(shape.total_sites()));
  }
  MatrixX<Scalar> full = field.values;
  const MatrixX<Scalar> transpose = spec.basis.transpose();
  detail::apply_along_axes(full, transpose, shape);
  return SpectralCoefficients<Scalar>{full.bottomRows(shape.basis_size())};
}

inline constexpr Index kDenseLaplacianMaxSites = 10000;

/// Graph Laplacian of the nearest-neighbour grid with free boundary.
/// Test oracle only; refuses shapes above kDenseLaplacianMaxSites.
template <typename Scalar = double>
MatrixX<Scalar> dense_laplacian(const LatticeShape& shape) {
  if (shape.total_sites() > kDenseLaplacianMaxSites) {
    throw UsageError("dense Laplacian refused: " + std::to_string(shape.total_sites()) + " sites exceeds " +
                     std::to_string(kDenseLaplacianMaxSites));
  }
  const Index m = shape.total_sites();
  MatrixX<Scalar> lap = MatrixX<Scalar>::Zero(m, m);
  for (Index s = 0; s < m; ++s) {
    for (int a = 0; a < shape.dim(); ++a) {
      const int x = shape.coordinate(s, a);
      for (int step : {-1, 1}) {
        if (x + step < -shape.half_width() || x + step > shape.half_width()) continue;
        const Index t = s + step * shape.stride(a);
        lap(s, s) += Scalar(1);
        lap(s, t) = Scalar(-1);
      }
    }
  }
  return lap;
}

}  // namespace manifold
