#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "stpcache/analytic.hpp"
#include "stpcache/catalog.hpp"

namespace stpcache {

enum class Method { KKT_BISECTION, LOCAL_FALLBACK, BRUTE_FORCE };

std::string_view to_string(Method method);

struct OptimizerResult {
  PlacementVector t_star;
  double nu = 0.0;            // Lagrange multiplier of sum T = K
  double stp = 0.0;           // objective at t_star
  Method method = Method::KKT_BISECTION;
  double kkt_residual = 0.0;  // at (t_star, nu)
  bool concavity_holds = false;
  bool bracket_failed = false;  // KKT attempted but D was not monotone
  std::size_t iterations = 0;
};

/// dq_file/dt, the same function for every file.
double derivative_dn(double t, const FileStpModel& model);

/// True iff the coefficient table has nonpositive second differences
/// (1e-9 slack), i.e. q_{c,m+1} - q_{c,m} <= q_{c,m} - q_{c,m-1} for
/// m = 2..M-1.
bool concavity_condition(const CoefficientTable& table);

/// Largest violation of the stationarity conditions of maximizing
/// sum a_n q(T_n) subject to sum T = K, 0 <= T <= 1, at multiplier nu:
/// |a_n D(T_n) - nu| inside, (a_n D(0) - nu)^+ at 0, (nu - a_n D(1))^+ at 1.
double kkt_residual(const PlacementVector& placement, const Catalog& catalog, const FileStpModel& model, double nu);

/// Water-filling: T_n(nu) solves a_n D(T_n) = nu (clipped to [0, 1]);
/// nu is bisected until sum T_n(nu) = K. Requires concavity of q_file. If
/// D turns out non-monotone the result comes from solve_local with
/// `bracket_failed` set.
OptimizerResult solve_kkt(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model);

/// Projected-gradient ascent with backtracking over the capped simplex.
/// Starts from `t_init` (uniform caching when absent).
OptimizerResult solve_local(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model,
                            std::optional<PlacementVector> t_init = std::nullopt);

/// Exhaustive search over {T on a grid of the given step, sum T = K}.
/// N <= 5.
OptimizerResult brute_force_oracle(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model,
                                   double grid_step);

/// solve_kkt when the concavity condition holds, solve_local otherwise.
OptimizerResult optimize_placement(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model);

/// Euclidean projection onto {0 <= T <= 1, sum T = K}.
std::vector<double> project_capped_simplex(const std::vector<double>& y, double cache_size);

}  // namespace stpcache
