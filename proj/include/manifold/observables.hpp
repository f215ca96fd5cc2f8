#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "manifold/lattice_spectral.hpp"

namespace manifold {

struct RadiusReport {
  double effective = 0.0;  // max_{z,w} |u(z) - u(w)|
  double bbox = 0.0;       // max_i (max u_i - min u_i)
  double gyration = 0.0;   // sqrt(mean |u - mean u|^2)
};

namespace detail {

inline double cross(const std::pair<double, double>& o, const std::pair<double, double>& a,
                    const std::pair<double, double>& b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

/// Andrew's monotone chain; returns hull vertices (collinear points dropped).
inline std::vector<std::pair<double, double>> convex_hull(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<std::pair<double, double>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

template <typename Scalar>
RadiusReport effective_radius(const FieldConfiguration<Scalar>& field) {
  RadiusReport r;
  const Index m = field.sites();
  const Index dim = field.range_dim();
  if (m == 0) return r;

  const auto values = field.values.template cast<double>();
  for (Index i = 0; i < dim; ++i) r.bbox = std::max(r.bbox, values.col(i).maxCoeff() - values.col(i).minCoeff());
  const Eigen::RowVectorXd centre = values.colwise().mean();
  r.gyration = std::sqrt((values.rowwise() - centre).rowwise().squaredNorm().mean());

  if (dim == 1) {
    r.effective = r.bbox;
  } else if (dim == 2) {
    std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(m));
    for (Index s = 0; s < m; ++s) pts[static_cast<std::size_t>(s)] = {values(s, 0), values(s, 1)};
    const auto hull = detail::convex_hull(std::move(pts));
    double best = 0.0;
    for (std::size_t a = 0; a < hull.size(); ++a) {
      for (std::size_t b = a + 1; b < hull.size(); ++b) {
        best = std::max(best, std::hypot(hull[a].first - hull[b].first, hull[a].second - hull[b].second));
      }
    }
    r.effective = best;
  } else {
    double best = 0.0;
    for (Index s = 0; s < m; ++s) {
      for (Index t = s + 1; t < m; ++t) best = std::max(best, (values.row(s) - values.row(t)).squaredNorm());
    }
    r.effective = std::sqrt(best);
  }
  return r;
}

struct ScalingPoint {
  double n = 0.0;
  double mean_radius = 0.0;
  double std_error_radius = 0.0;
};

/// Fit of log R = intercept + exponent log N + rho log log N with rho fixed.
struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double r_squared = 0.0;
  double rho = 0.0;
  std::vector<ScalingPoint> points;
};

/// Weighted least squares in log-log coordinates. Weights are (R / se)^2 from
/// the delta method when every point carries a positive stderr, uniform
/// otherwise. The exponent stderr is inflated by sqrt(chi2 / dof) when that
/// exceeds one.
ScalingFit fit_scaling_exponent(const std::vector<ScalingPoint>& points, double rho = 0.0);

struct ExponentBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// N-exponents of the radius bounds for the weakly self-avoiding field:
/// d = 2, D = 1: (4/3, 4/3); d >= 3, 1 <= D <= d:
/// ((d - 2(d - D)/(D + 2)) / D, d/2 + (d - D)/(D + 2)).
ExponentBounds theoretical_exponents(int d, int range_dim);

}  // namespace manifold
