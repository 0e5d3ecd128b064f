#include "stpcache/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stpcache {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::KKT_BISECTION: return "kkt_bisection";
    case Method::LOCAL_FALLBACK: return "local_fallback";
    case Method::BRUTE_FORCE: return "brute_force";
  }
  return "?";
}

double derivative_dn(double t, const FileStpModel& model) { return model.derivative(t); }

bool concavity_condition(const CoefficientTable& table) {
  const std::size_t M = table.coop_size();
  for (std::size_t m = 2; m + 1 <= M; ++m) {
    if (table.at(m + 1) - 2.0 * table.at(m) + table.at(m - 1) > 1e-9) return false;
  }
  return true;
}

namespace {

void check_problem(const Catalog& catalog, std::size_t cache_size) {
  if (catalog.n_files == 0 || catalog.popularity.size() != catalog.n_files) {
    throw std::invalid_argument("optimizer: malformed catalog");
  }
  if (cache_size < 1 || cache_size >= catalog.n_files) {
    throw std::invalid_argument("optimizer: cache size K = " + std::to_string(cache_size) + " must satisfy 1 <= K < N = " +
                                std::to_string(catalog.n_files));
  }
}

double objective(const std::vector<double>& t, const Catalog& catalog, const FileStpModel& model) {
  double sum = 0.0;
  for (std::size_t n = 0; n < t.size(); ++n) sum += catalog.popularity[n] * model.q_file(t[n]);
  return sum;
}

// Makes the sum exactly K after round-off by nudging interior entries.
std::vector<double> settle_sum(std::vector<double> t, double cache_size) {
  for (int pass = 0; pass < 4; ++pass) {
    const double excess = std::accumulate(t.begin(), t.end(), 0.0) - cache_size;
    if (std::abs(excess) <= 1e-12) break;
    std::size_t free = 0;
    for (double v : t) free += (excess > 0.0 ? v > 0.0 : v < 1.0) ? 1 : 0;
    if (free == 0) break;
    const double share = excess / static_cast<double>(free);
    for (auto& v : t) {
      if (excess > 0.0 ? v > 0.0 : v < 1.0) v = std::clamp(v - share, 0.0, 1.0);
    }
  }
  return t;
}

// D must be nonincreasing for the water-filling inverse to be well posed.
bool derivative_monotone(const FileStpModel& model) {
  constexpr int kGrid = 400;
  double previous = model.derivative(0.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double d = model.derivative(static_cast<double>(i) / kGrid);
    if (d > previous + 1e-12 * std::max(1.0, std::abs(previous))) return false;
    previous = d;
  }
  return true;
}

// Solves a D(t) = nu on [0, 1] for nonincreasing D.
double water_level(double a, double nu, double d0, double d1, const FileStpModel& model) {
  if (a * d0 <= nu) return 0.0;
  if (a * d1 >= nu) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (a * model.derivative(mid) > nu) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double kkt_residual(const PlacementVector& placement, const Catalog& catalog, const FileStpModel& model, double nu) {
  double worst = 0.0;
  for (std::size_t n = 0; n < placement.size(); ++n) {
    const double t = placement[n];
    const double g = catalog.popularity[n] * model.derivative(t);
    double r = 0.0;
    if (t <= 1e-12) {
      r = std::max(0.0, g - nu);
    } else if (t >= 1.0 - 1e-12) {
      r = std::max(0.0, nu - g);
    } else {
      r = std::abs(g - nu);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

std::vector<double> project_capped_simplex(const std::vector<double>& y, double cache_size) {
  if (cache_size < 0.0 || cache_size > static_cast<double>(y.size())) {
    throw std::invalid_argument("project_capped_simplex: infeasible budget");
  }
  // sum clamp(y - mu, 0, 1) is nonincreasing in mu; bisect for the budget.
  double lo = *std::min_element(y.begin(), y.end()) - 1.0;
  double hi = *std::max_element(y.begin(), y.end());
  std::vector<double> t(y.size());
  auto fill = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      t[i] = std::clamp(y[i] - mu, 0.0, 1.0);
      s += t[i];
    }
    return s;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fill(mid) > cache_size) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  fill(0.5 * (lo + hi));
  return settle_sum(std::move(t), cache_size);
}

OptimizerResult solve_local(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model,
                            std::optional<PlacementVector> t_init) {
  check_problem(catalog, cache_size);
  const PlacementVector start = t_init ? *t_init : baseline_udc(catalog, cache_size);
  if (start.size() != catalog.n_files) throw std::invalid_argument("solve_local: t_init has the wrong dimension");
  const std::size_t N = catalog.n_files;
  const double K = static_cast<double>(cache_size);

  std::vector<double> t(start.probs().begin(), start.probs().end());
  double f = objective(t, catalog, model);
  std::vector<double> grad(N);
  std::vector<double> y(N);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < 500; ++it) {
    for (std::size_t n = 0; n < N; ++n) grad[n] = catalog.popularity[n] * model.derivative(t[n]);
    for (std::size_t n = 0; n < N; ++n) y[n] = t[n] + grad[n];
    const auto unit = project_capped_simplex(y, K);
    double pg = 0.0;
    for (std::size_t n = 0; n < N; ++n) pg += (unit[n] - t[n]) * (unit[n] - t[n]);
    if (std::sqrt(pg) < 1e-6) break;

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t n = 0; n < N; ++n) y[n] = t[n] + step * grad[n];
      auto trial = project_capped_simplex(y, K);
      double ascent = 0.0;
      for (std::size_t n = 0; n < N; ++n) ascent += grad[n] * (trial[n] - t[n]);
      const double f_trial = objective(trial, catalog, model);
      if (f_trial >= f + 1e-4 * ascent && f_trial >= f) {
        t = std::move(trial);
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 1e6);
  }

  // Multiplier: mean of a_n D(T_n) over interior entries; with every entry
  // at a bound, the middle of the interval allowed by both bound sets.
  double nu_sum = 0.0;
  std::size_t interior = 0;
  double at_zero = -std::numeric_limits<double>::infinity();
  double at_one = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < N; ++n) {
    const double g = catalog.popularity[n] * model.derivative(t[n]);
    if (t[n] <= 1e-12) {
      at_zero = std::max(at_zero, g);
    } else if (t[n] >= 1.0 - 1e-12) {
      at_one = std::min(at_one, g);
    } else {
      nu_sum += g;
      ++interior;
    }
  }
  double nu = 0.0;
  if (interior > 0) {
    nu = nu_sum / static_cast<double>(interior);
  } else if (std::isfinite(at_zero) && std::isfinite(at_one)) {
    nu = 0.5 * (at_zero + at_one);
  } else {
    nu = std::isfinite(at_zero) ? at_zero : at_one;
  }

  OptimizerResult r;
  r.t_star = validate_placement(settle_sum(std::move(t), K), cache_size);
  r.stp = model.q_total(r.t_star, catalog);
  r.method = Method::LOCAL_FALLBACK;
  r.concavity_holds = concavity_condition(model.table());
  r.iterations = it;
  r.nu = nu;
  r.kkt_residual = kkt_residual(r.t_star, catalog, model, nu);
  return r;
}

OptimizerResult solve_kkt(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model) {
  check_problem(catalog, cache_size);
  const bool concave = concavity_condition(model.table());
  if (!concave) throw std::invalid_argument("solve_kkt: the concavity condition does not hold");
  if (!derivative_monotone(model)) {
    OptimizerResult r = solve_local(catalog, cache_size, model);
    r.bracket_failed = true;
    return r;
  }

  const std::size_t N = catalog.n_files;
  const double K = static_cast<double>(cache_size);
  const auto& a = catalog.popularity;
  const double d0 = model.derivative(0.0);
  const double d1 = model.derivative(1.0);
  const double a_max = *std::max_element(a.begin(), a.end());
  const double a_min = *std::min_element(a.begin(), a.end());

  // At nu_lo every file saturates (sum N > K), at nu_hi none is cached.
  double nu_lo = a_min * d1;
  double nu_hi = a_max * d0;
  std::vector<double> t_lo(N, 1.0);
  std::vector<double> t_hi(N, 0.0);
  std::vector<double> t(N);
  auto levels = [&](double nu, std::vector<double>& out) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      out[n] = water_level(a[n], nu, d0, d1, model);
      s += out[n];
    }
    return s;
  };
  std::size_t it = 0;
  for (; it < 200; ++it) {
    const double nu = 0.5 * (nu_lo + nu_hi);
    if (!(nu > nu_lo && nu < nu_hi)) break;
    const double s = levels(nu, t);
    if (std::abs(s - K) <= 1e-12) {
      nu_lo = nu_hi = nu;
      t_lo = t_hi = t;
      break;
    }
    if (s > K) {
      nu_lo = nu;
      t_lo = t;
    } else {
      nu_hi = nu;
      t_hi = t;
    }
  }
  // Any remaining gap (a flat stretch of D makes sum T jump) is closed by
  // mixing the two bracketing level sets, both stationary at ~nu.
  const double s_lo = std::accumulate(t_lo.begin(), t_lo.end(), 0.0);
  const double s_hi = std::accumulate(t_hi.begin(), t_hi.end(), 0.0);
  const double w = s_lo > s_hi ? (K - s_hi) / (s_lo - s_hi) : 1.0;
  for (std::size_t n = 0; n < N; ++n) t[n] = t_hi[n] + w * (t_lo[n] - t_hi[n]);

  OptimizerResult r;
  r.t_star = validate_placement(settle_sum(std::move(t), K), cache_size);
  r.nu = 0.5 * (nu_lo + nu_hi);
  r.stp = model.q_total(r.t_star, catalog);
  r.method = Method::KKT_BISECTION;
  r.kkt_residual = kkt_residual(r.t_star, catalog, model, r.nu);
  r.concavity_holds = true;
  r.iterations = it;
  return r;
}

OptimizerResult brute_force_oracle(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model,
                                   double grid_step) {
  check_problem(catalog, cache_size);
  const std::size_t N = catalog.n_files;
  if (N > 5) throw std::invalid_argument("brute_force_oracle: N = " + std::to_string(N) + " exceeds the limit of 5");
  const double units_real = 1.0 / grid_step;
  const auto units = static_cast<std::size_t>(std::llround(units_real));
  if (!(grid_step > 0.0) || std::abs(units_real - static_cast<double>(units)) > 1e-9 || units > 400) {
    throw std::invalid_argument("brute_force_oracle: grid_step must be 1/k for an integer k <= 400");
  }
  // q_file is the same for every file, so tabulate it once on the grid.
  std::vector<double> q(units + 1);
  for (std::size_t k = 0; k <= units; ++k) q[k] = model.q_file(static_cast<double>(k) / static_cast<double>(units));

  const std::size_t total = cache_size * units;
  std::vector<std::size_t> k(N, 0);
  std::vector<std::size_t> best_k;
  double best = -1.0;
  std::size_t visited = 0;
  // Depth-first over compositions of `total` into N parts of size <= units.
  auto recurse = [&](auto&& self, std::size_t n, std::size_t remaining, double partial) -> void {
    if (n + 1 == N) {
      if (remaining > units) return;
      k[n] = remaining;
      ++visited;
      const double f = partial + catalog.popularity[n] * q[remaining];
      if (f > best) {
        best = f;
        best_k = k;
      }
      return;
    }
    const std::size_t tail_cap = (N - n - 1) * units;
    const std::size_t lo = remaining > tail_cap ? remaining - tail_cap : 0;
    for (std::size_t v = lo; v <= std::min(units, remaining); ++v) {
      k[n] = v;
      self(self, n + 1, remaining - v, partial + catalog.popularity[n] * q[v]);
    }
  };
  recurse(recurse, 0, total, 0.0);

  std::vector<double> t(N);
  for (std::size_t n = 0; n < N; ++n) t[n] = static_cast<double>(best_k[n]) / static_cast<double>(units);
  OptimizerResult r;
  r.t_star = validate_placement(settle_sum(std::move(t), static_cast<double>(cache_size)), cache_size);
  r.stp = model.q_total(r.t_star, catalog);
  r.method = Method::BRUTE_FORCE;
  r.nu = std::numeric_limits<double>::quiet_NaN();
  r.kkt_residual = std::numeric_limits<double>::quiet_NaN();
  r.concavity_holds = concavity_condition(model.table());
  r.iterations = visited;
  return r;
}

OptimizerResult optimize_placement(const Catalog& catalog, std::size_t cache_size, const FileStpModel& model) {
  if (concavity_condition(model.table())) return solve_kkt(catalog, cache_size, model);
  return solve_local(catalog, cache_size, model);
}

}  // namespace stpcache
