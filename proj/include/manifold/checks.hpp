#pragma once

// Numerical verification suite shared by `manifold_mc verify` and the
// acceptance tests. Each check compares an implementation path against an
// independent oracle (dense diagonalisation, quadrature, brute force, exact
// Gaussian sums) or a closed form, at a pinned tolerance.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "manifold/mcmc.hpp"

namespace manifold::checks {

enum class Level { quick, full };

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string threshold;
  nlohmann::json values;
  double seconds = 0.0;
};

CheckResult spectral_exactness(Level level);
CheckResult energy_exactness(Level level, std::uint64_t seed);
CheckResult gaussian_exactness(Level level, std::uint64_t seed);
CheckResult drift_identities(Level level, std::uint64_t seed);
CheckResult variance_bound_shapes(Level level, std::uint64_t seed);
CheckResult jensen_bound(Level level, std::uint64_t seed, int jobs);
CheckResult mcmc_gamma_zero(Level level, std::uint64_t seed);

/// The gamma = 0 chain behind mcmc_gamma_zero (N=2, d=2, D=1, beta=1), with
/// observers "diff" = u(-2,-2) - u(2,2) and "coef" = X of mode (0, 1).
Trace gamma_zero_reference_chain(Level level, std::uint64_t seed);

std::vector<CheckResult> run_all(Level level, std::uint64_t seed, int jobs);

nlohmann::json to_json(const CheckResult& r);
nlohmann::json report(const std::vector<CheckResult>& results);

}  // namespace manifold::checks
