#pragma once

// Local time of the embedded lattice and the self-intersection energy
// Phi(u) = int l(y)^2 dy. Phi is evaluated exactly through the identity
//   Phi = sum_{x, x'} prod_i max(0, 1 - |u_i(x) - u_i(x')|),
// the volume of overlap of the two unit cubes centred at u(x) and u(x').

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "manifold/errors.hpp"
#include "manifold/lattice_spectral.hpp"

namespace manifold {

inline constexpr int kMaxRangeDim = 8;

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxRangeDim>;

/// Overlap volume of the unit cubes centred at p and q.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar cube_overlap(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  Scalar v(1);
  for (Index i = 0; i < p.size(); ++i) {
    const Scalar side = Scalar(1) - std::abs(p(i) - q(i));
    if (side <= Scalar(0)) return Scalar(0);
    v *= side;
  }
  return v;
}

/// Spatial hash with unit cells, cell(y) = floor(y). Sites whose cells differ
/// by more than one on any axis have zero overlap.
template <typename Scalar>
class CellIndex {
 public:
  CellIndex() = default;
  explicit CellIndex(const FieldConfiguration<Scalar>& field) { rebuild(field); }

  void rebuild(const FieldConfiguration<Scalar>& field) {
    range_dim_ = static_cast<int>(field.range_dim());
    if (range_dim_ < 1 || range_dim_ > kMaxRangeDim) {
      throw UsageError("range dimension must be in 1.." + std::to_string(kMaxRangeDim));
    }
    bits_ = 63 / range_dim_;
    bias_ = std::int64_t{1} << (bits_ - 1);
    offsets_.clear();
    std::vector<std::int64_t> current{0};
    for (int i = 0; i < range_dim_; ++i) {
      std::vector<std::int64_t> next;
      for (std::int64_t base : current) {
        for (std::int64_t step : {-1, 0, 1}) next.push_back(base + step * (std::int64_t{1} << (bits_ * i)));
      }
      current = std::move(next);
    }
    offsets_ = std::move(current);

    cells_.clear();
    site_key_.resize(static_cast<std::size_t>(field.sites()));
    slot_.resize(static_cast<std::size_t>(field.sites()));
    for (Index s = 0; s < field.sites(); ++s) insert(s, key_of(field.values.row(s)));
  }

  template <typename Derived>
  std::uint64_t key_of(const Eigen::MatrixBase<Derived>& p) const {
    std::uint64_t key = 0;
    const double limit = static_cast<double>(bias_ - 2);
    for (int i = 0; i < range_dim_; ++i) {
      const double c = std::floor(static_cast<double>(p(i)));
      if (!(std::abs(c) < limit)) throw UsageError("field value outside the representable cell range");
      key |= static_cast<std::uint64_t>(static_cast<std::int64_t>(c) + bias_) << (bits_ * i);
    }
    return key;
  }

  std::uint64_t site_key(Index site) const { return site_key_[static_cast<std::size_t>(site)]; }

  /// Re-files `site` after its position changed to `p`.
  template <typename Derived>
  void move(Index site, const Eigen::MatrixBase<Derived>& p) {
    const std::uint64_t key = key_of(p);
    if (key == site_key(site)) return;
    erase(site);
    insert(site, key);
  }

  /// Calls f(site) for every site filed in the 3^D cells around p.
  template <typename Derived, typename F>
  void for_each_near(const Eigen::MatrixBase<Derived>& p, F&& f) const {
    const std::uint64_t key = key_of(p);
    for (std::int64_t off : offsets_) {
      const auto it = cells_.find(key + static_cast<std::uint64_t>(off));
      if (it == cells_.end()) continue;
      for (Index t : it->second) f(t);
    }
  }

  std::size_t occupied_cells() const { return cells_.size(); }

 private:
  void insert(Index site, std::uint64_t key) {
    auto& list = cells_[key];
    site_key_[static_cast<std::size_t>(site)] = key;
    slot_[static_cast<std::size_t>(site)] = list.size();
    list.push_back(site);
  }

  void erase(Index site) {
    const auto it = cells_.find(site_key(site));
    auto& list = it->second;
    const std::size_t slot = slot_[static_cast<std::size_t>(site)];
    const Index last = list.back();
    list[slot] = last;
    slot_[static_cast<std::size_t>(last)] = slot;
    list.pop_back();
    if (list.empty()) cells_.erase(it);
  }

  int range_dim_ = 0;
  int bits_ = 0;
  std::int64_t bias_ = 0;
  std::vector<std::int64_t> offsets_;
  std::unordered_map<std::uint64_t, std::vector<Index>> cells_;
  std::vector<std::uint64_t> site_key_;
  std::vector<std::size_t> slot_;
};

/// Phi split into the z = w terms ((2N+1)^d, one per site) and the rest.
struct EnergyBreakdown {
  double total = 0.0;
  double diagonal = 0.0;
  double offdiag = 0.0;
};

template <typename Scalar>
EnergyBreakdown self_intersection_energy(const FieldConfiguration<Scalar>& field, const CellIndex<Scalar>& cells) {
  double offdiag = 0.0;
  for (Index s = 0; s < field.sites(); ++s) {
    const Point<Scalar> p = field.values.row(s);
    cells.for_each_near(p, [&](Index t) {
      if (t > s) offdiag += 2.0 * static_cast<double>(cube_overlap(p, field.values.row(t)));
    });
  }
  const double diagonal = static_cast<double>(field.sites());
  return {diagonal + offdiag, diagonal, offdiag};
}

template <typename Scalar>
EnergyBreakdown self_intersection_energy(const FieldConfiguration<Scalar>& field) {
  return self_intersection_energy(field, CellIndex<Scalar>(field));
}

/// O(M^2) reference for the pair sum.
template <typename Scalar>
EnergyBreakdown brute_force_energy(const FieldConfiguration<Scalar>& field) {
  double offdiag = 0.0;
  for (Index s = 0; s < field.sites(); ++s) {
    for (Index t = s + 1; t < field.sites(); ++t) {
      offdiag += 2.0 * static_cast<double>(cube_overlap(field.values.row(s), field.values.row(t)));
    }
  }
  const double diagonal = static_cast<double>(field.sites());
  return {diagonal + offdiag, diagonal, offdiag};
}

/// Phi(after) - Phi(before) when `site` moves to `new_value`; only pairs
/// involving `site` are visited.
template <typename Scalar, typename Derived>
double energy_delta_single_site(const FieldConfiguration<Scalar>& field, const CellIndex<Scalar>& cells, Index site,
                                const Eigen::MatrixBase<Derived>& new_value) {
  const Point<Scalar> old_value = field.values.row(site);
  if (cells.site_key(site) != cells.key_of(old_value)) {
    throw ConsistencyError("cell index is stale for site " + std::to_string(site));
  }
  const Point<Scalar> next = new_value;
  double before = 0.0;
  cells.for_each_near(old_value, [&](Index t) {
    if (t != site) before += static_cast<double>(cube_overlap(old_value, field.values.row(t)));
  });
  double after = 0.0;
  cells.for_each_near(next, [&](Index t) {
    if (t != site) after += static_cast<double>(cube_overlap(next, field.values.row(t)));
  });
  return 2.0 * (after - before);
}

/// Occupation counts l(z) for integer levels z in the box [lo, hi] of Z^D.
/// A value on a shared face z + 1/2 is counted in the lower cell z.
struct LocalTimeHistogram {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<long> counts;  // lexicographic over z, last axis fastest
  bool partial = false;      // some site fell outside the window

  long total() const {
    long sum = 0;
    for (long c : counts) sum += c;
    return sum;
  }
};

template <typename Scalar>
LocalTimeHistogram local_time_histogram(const FieldConfiguration<Scalar>& field, std::vector<int> lo,
                                        std::vector<int> hi) {
  const auto dim = static_cast<std::size_t>(field.range_dim());
  if (lo.size() != dim || hi.size() != dim) throw UsageError("window dimension does not match field range");
  std::size_t cells = 1;
  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t i = dim; i-- > 0;) {
    if (hi[i] < lo[i]) throw UsageError("empty histogram window");
    stride[i] = cells;
    cells *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  LocalTimeHistogram h{std::move(lo), std::move(hi), std::vector<long>(cells, 0), false};
  for (Index s = 0; s < field.sites(); ++s) {
    std::size_t flat = 0;
    bool inside = true;
    for (std::size_t i = 0; i < dim; ++i) {
      const double v = static_cast<double>(field.values(s, static_cast<Index>(i)));
      const double z = std::ceil(v - 0.5);
      if (z < h.lo[i] || z > h.hi[i]) {
        inside = false;
        break;
      }
      flat += static_cast<std::size_t>(static_cast<int>(z) - h.lo[i]) * stride[i];
    }
    if (inside) {
      ++h.counts[flat];
    } else {
      h.partial = true;
    }
  }
  return h;
}

/// Smallest integer window covering every value of the field.
template <typename Scalar>
std::pair<std::vector<int>, std::vector<int>> covering_window(const FieldConfiguration<Scalar>& field) {
  std::vector<int> lo, hi;
  for (Index i = 0; i < field.range_dim(); ++i) {
    lo.push_back(static_cast<int>(std::ceil(static_cast<double>(field.values.col(i).minCoeff()) - 0.5)));
    hi.push_back(static_cast<int>(std::ceil(static_cast<double>(field.values.col(i).maxCoeff()) - 0.5)));
  }
  return {lo, hi};
}

inline constexpr Index kQuadratureMaxSites = 100;

/// Midpoint-rule approximation of int l(y)^2 dy on a grid of spacing `step`
/// covering every cube. Independent of the pair identity; used as an oracle.
template <typename Scalar>
double energy_by_quadrature(const FieldConfiguration<Scalar>& field, double step) {
  const Index m = field.sites();
  const Index dim = field.range_dim();
  if (m > kQuadratureMaxSites || dim > 2 || dim < 1) {
    throw UsageError("quadrature oracle refused: needs at most " + std::to_string(kQuadratureMaxSites) +
                     " sites and D <= 2");
  }
  if (!(step > 0.0)) throw UsageError("quadrature step must be positive");

  std::array<double, 2> lo{0.0, 0.0};
  std::array<Index, 2> count{1, 1};
  for (Index i = 0; i < dim; ++i) {
    lo[i] = static_cast<double>(field.values.col(i).minCoeff()) - 0.5 - step;
    const double hi = static_cast<double>(field.values.col(i).maxCoeff()) + 0.5 + step;
    count[i] = static_cast<Index>(std::ceil((hi - lo[i]) / step));
  }
  // Grid points y_i = lo + (g + 1/2) step with |y - u(x)| <= 1/2 on each axis.
  auto index_range = [&](double u, Index axis) {
    const Index first = static_cast<Index>(std::ceil((u - 0.5 - lo[axis]) / step - 0.5));
    const Index last = static_cast<Index>(std::floor((u + 0.5 - lo[axis]) / step - 0.5));
    return std::pair{std::max<Index>(first, 0), std::min<Index>(last, count[axis] - 1)};
  };

  std::vector<long> diff(static_cast<std::size_t>(count[0] + 1));
  double sum_sq = 0.0;
  for (Index row = 0; row < count[1]; ++row) {
    std::fill(diff.begin(), diff.end(), 0);
    bool any = false;
    for (Index s = 0; s < m; ++s) {
      if (dim == 2) {
        const auto [r0, r1] = index_range(static_cast<double>(field.values(s, 1)), 1);
        if (row < r0 || row > r1) continue;
      }
      const auto [c0, c1] = index_range(static_cast<double>(field.values(s, 0)), 0);
      if (c0 > c1) continue;
      ++diff[static_cast<std::size_t>(c0)];
      --diff[static_cast<std::size_t>(c1 + 1)];
      any = true;
    }
    if (!any) continue;
    long level = 0;
    for (Index c = 0; c < count[0]; ++c) {
      level += diff[static_cast<std::size_t>(c)];
      sum_sq += static_cast<double>(level * level);
    }
  }
  return sum_sq * std::pow(step, static_cast<double>(dim));
}

}  // namespace manifold
