#include <cmath>
#include <set>
#include <string>

#include "manifold/errors.hpp"
#include "manifold/observables.hpp"

namespace manifold {

ScalingFit fit_scaling_exponent(const std::vector<ScalingPoint>& points, double rho) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.mean_radius > 0.0)) throw UsageError("scaling fit needs positive radii");
    if (!(p.n > 1.0) && rho != 0.0) throw UsageError("log-corrected fit needs N > 1");
    if (!(p.n > 0.0)) throw UsageError("scaling fit needs positive N");
    distinct.insert(p.n);
  }
  if (distinct.size() < 3) throw UsageError("scaling fit needs at least 3 distinct N values");

  bool weighted = true;
  for (const auto& p : points) weighted = weighted && p.std_error_radius > 0.0;

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    const double log_n = std::log(p.n);
    design(i, 0) = 1.0;
    design(i, 1) = log_n;
    y(i) = std::log(p.mean_radius) - (rho != 0.0 ? rho * std::log(log_n) : 0.0);
    w(i) = weighted ? std::pow(p.mean_radius / p.std_error_radius, 2) : 1.0;
  }

  const Eigen::Matrix2d normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::Vector2d beta = normal.ldlt().solve(design.transpose() * w.asDiagonal() * y);
  const Eigen::VectorXd resid = y - design * beta;
  const double chi2 = resid.dot(w.asDiagonal() * resid);
  const double dof = static_cast<double>(n - 2);
  const Eigen::Matrix2d cov = normal.inverse();

  double scale = 1.0;
  if (dof > 0.0) {
    const double reduced = chi2 / dof;
    scale = weighted ? std::max(1.0, reduced) : reduced;
  }

  const double ybar = y.dot(w) / w.sum();
  const double ss_tot = (y.array() - ybar).square().matrix().dot(w);

  ScalingFit fit;
  fit.intercept = beta(0);
  fit.exponent = beta(1);
  fit.std_error = std::sqrt(cov(1, 1) * scale);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - chi2 / ss_tot : 1.0;
  fit.rho = rho;
  fit.points = points;
  return fit;
}

ExponentBounds theoretical_exponents(int d, int range_dim) {
  const int big_d = range_dim;
  if (d < 2 || big_d < 1 || big_d > d) {
    throw UsageError("exponents defined for d >= 2 and 1 <= D <= d (got d=" + std::to_string(d) +
                     ", D=" + std::to_string(big_d) + ")");
  }
  if (d == 2) {
    if (big_d != 1) throw UsageError("for d = 2 the exponents are stated only for D = 1");
    return {4.0 / 3.0, 4.0 / 3.0};
  }
  const double dd = d;
  const double rr = big_d;
  return {(dd - 2.0 * (dd - rr) / (rr + 2.0)) / rr, dd / 2.0 + (dd - rr) / (rr + 2.0)};
}

}  // namespace manifold
