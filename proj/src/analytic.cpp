#include "stpcache/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "stpcache/quadrature.hpp"

namespace stpcache {

void NetworkConfig::validate() const {
  if (!(bs_density > 0.0) || !std::isfinite(bs_density)) throw std::invalid_argument("network: bs_density must be > 0");
  if (coop_size < 1) throw std::invalid_argument("network: coop_size M must be >= 1");
  if (!(sir_threshold > 0.0) || !std::isfinite(sir_threshold)) {
    throw std::invalid_argument("network: sir_threshold must be > 0");
  }
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::NCJT: return "ncjt";
    case Scheme::CJT_UPPER: return "cjt_upper";
    case Scheme::CJT_APPROX: return "cjt_approx";
    case Scheme::CJT_EXACT: return "cjt_exact";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (auto s : {Scheme::NCJT, Scheme::CJT_UPPER, Scheme::CJT_APPROX, Scheme::CJT_EXACT}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected ncjt, cjt_upper, cjt_approx or cjt_exact)");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec q = *this;
  q.radial_nodes *= 2;
  q.plane_nodes *= 2;
  q.cube_nodes *= 2;
  q.qmc_points *= 2;
  return q;
}

bool CoefficientTable::strictly_increasing() const {
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (!(q[i] > q[i - 1])) return false;
  }
  return true;
}

namespace {

// x^n for small integer n.
double ipow(double x, std::size_t n) {
  double r = 1.0;
  for (; n != 0; n >>= 1, x *= x) {
    if (n & 1U) r *= x;
  }
  return r;
}

double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

// Integral of f over [0,1]^dim: tensor Gauss-Legendre up to
// quad.tensor_max_dim, Sobol points beyond.
template <class F>
double integrate_cube(std::size_t dim, const QuadratureSpec& quad, F&& f) {
  if (dim == 0) return f(std::span<const double>{});
  std::vector<double> point(dim);
  if (dim > quad.tensor_max_dim) {
    const auto pts = quad::sobol_points(dim, quad.qmc_points);
    double sum = 0.0;
    for (std::size_t i = 0; i < quad.qmc_points; ++i) {
      sum += f(std::span<const double>(pts.data() + i * dim, dim));
    }
    return sum / static_cast<double>(quad.qmc_points);
  }
  const auto& rule = quad::gauss_legendre(quad.cube_nodes);
  const std::size_t n = rule.nodes.size();
  std::vector<std::size_t> idx(dim, 0);
  double sum = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      point[d] = rule.nodes[idx[d]];
      w *= rule.weights[idx[d]];
    }
    sum += w * f(std::span<const double>(point));
    std::size_t d = 0;
    while (d < dim && ++idx[d] == n) idx[d++] = 0;
    if (d == dim) break;
  }
  return sum;
}

// sum_j (-1)^(j+1) C(x, j) A(j beta tau / denom, 1)^(-M): the u-integral of
// exp(-A(theta, u)) u^(M-1) / Gamma(M) is A(theta, 1)^(-M) because A is
// linear in u.
double alternating_link_sum(std::size_t x, double beta, double denom, const NetworkConfig& cfg) {
  const double M = static_cast<double>(cfg.coop_size);
  double sum = 0.0;
  for (std::size_t j = 1; j <= x; ++j) {
    const double theta = std::isinf(denom) ? 0.0 : static_cast<double>(j) * beta * cfg.sir_threshold / denom;
    const double term = binomial(x, j) * std::pow(big_a(cfg.alpha, theta, 1.0), -M);
    sum += (j % 2 == 1) ? term : -term;
  }
  return sum;
}

void check_r_args(std::size_t m, std::size_t x, double beta, const NetworkConfig& cfg) {
  cfg.validate();
  if (m < 1 || m > cfg.coop_size) {
    throw std::invalid_argument("R_m: m = " + std::to_string(m) + " outside 1.." + std::to_string(cfg.coop_size));
  }
  if (x < 1) throw std::invalid_argument("R_m: x must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("R_m: beta must lie in (0, 1]");
}

}  // namespace

double r_m1(std::size_t m, std::size_t x, double beta, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  check_r_args(m, x, beta, cfg);
  if (m == cfg.coop_size) return 0.0;
  const double half_alpha = 0.5 * cfg.alpha.value();
  return integrate_cube(m, quad, [&](std::span<const double> t) {
    double denom = 0.0;
    for (double ti : t) denom += std::pow(ti, -half_alpha);
    return alternating_link_sum(x, beta, denom, cfg);
  });
}

double r_m2(std::size_t m, std::size_t x, double beta, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  check_r_args(m, x, beta, cfg);
  if (m == 1) return std::pow(big_a(cfg.alpha, cfg.sir_threshold, 1.0), -static_cast<double>(cfg.coop_size));
  const double half_alpha = 0.5 * cfg.alpha.value();
  return integrate_cube(m - 1, quad, [&](std::span<const double> t) {
    double denom = 1.0;
    for (double ti : t) denom += std::pow(ti, -half_alpha);
    return alternating_link_sum(x, beta, denom, cfg);
  });
}

CoefficientTable coefficient_table(Scheme scheme, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  if (scheme == Scheme::CJT_EXACT) {
    throw std::invalid_argument("coefficient_table: cjt_exact has no analytic form (simulator only)");
  }
  cfg.validate();
  const std::size_t M = cfg.coop_size;
  CoefficientTable table{scheme, std::vector<double>(M)};
  for (std::size_t m = 1; m <= M; ++m) {
    std::size_t x = 1;
    double beta = 1.0;
    if (scheme == Scheme::CJT_UPPER) {
      x = m;
      beta = alzer_beta(static_cast<unsigned>(m));
    } else if (scheme == Scheme::CJT_APPROX) {
      x = m;
    }
    const double share = static_cast<double>(m) / static_cast<double>(M);
    const double q = (1.0 - share) * r_m1(m, x, beta, cfg, quad) + share * r_m2(m, x, beta, cfg, quad);
    table.q[m - 1] = std::clamp(q, 0.0, 1.0);
  }
  return table;
}

FallbackLinkKernel::FallbackLinkKernel(const NetworkConfig& cfg, const QuadratureSpec& quad)
    : coop_size_(cfg.coop_size), a_tau_(big_a(cfg.alpha, cfg.sir_threshold, 1.0)) {
  cfg.validate();
  // With u_0 = z and u_M = z rho the radial variable z integrates in closed
  // form, leaving
  //   q_n0(t) = int_0^1 M t rho^(M-1) / [t A(tau,1) + (1-t) rho A(tau rho^(-alpha/2),1)]^(M+1) drho.
  const auto rule = quad::geometric_panels(quad.radial_nodes, quad.radial_levels);
  const double M = static_cast<double>(coop_size_);
  const double half_alpha = 0.5 * cfg.alpha.value();
  weight_.reserve(rule.nodes.size());
  link_.reserve(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double rho = rule.nodes[k];
    weight_.push_back(rule.weights[k] * M * std::pow(rho, M - 1.0));
    link_.push_back(big_a(cfg.alpha, cfg.sir_threshold * std::pow(rho, -half_alpha), rho));
  }
}

double FallbackLinkKernel::value(double t) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < weight_.size(); ++k) {
    const double c = t * a_tau_ + (1.0 - t) * link_[k];
    sum += weight_[k] / ipow(c, coop_size_ + 1);
  }
  return t * sum;
}

double FallbackLinkKernel::derivative(double t) const {
  const double p = static_cast<double>(coop_size_) + 1.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < weight_.size(); ++k) {
    const double c = t * a_tau_ + (1.0 - t) * link_[k];
    const double cp = 1.0 / ipow(c, coop_size_ + 1);
    sum += weight_[k] * (cp - p * t * (a_tau_ - link_[k]) * cp / c);
  }
  return sum;
}

double q_n0(double t, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("q_n0: t must lie in (0, 1]");
  return FallbackLinkKernel(cfg, quad).value(t);
}

double q_n0_double_integral(double t, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("q_n0: t must lie in (0, 1]");
  cfg.validate();
  const double M = static_cast<double>(cfg.coop_size);
  const double half_alpha = 0.5 * cfg.alpha.value();
  const double tau = cfg.sir_threshold;
  const double a_tau = big_a(cfg.alpha, tau, 1.0);
  // Scales of the two semi-infinite axes: w = u_0 - u_M concentrates below
  // t / A(tau,1); u_M below M times that.
  const double w_scale = t / a_tau;
  const double m_scale = M * w_scale;
  const double prefactor = 1.0 / (std::tgamma(M) * std::pow(t, M));
  const auto& rule = quad::gauss_legendre(quad.plane_nodes);

  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double vi = rule.nodes[i];
    const double u_m = m_scale * vi / (1.0 - vi);
    const double jac_m = m_scale / ((1.0 - vi) * (1.0 - vi));
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double vj = rule.nodes[j];
      const double w = w_scale * vj / (1.0 - vj);
      const double jac_w = w_scale / ((1.0 - vj) * (1.0 - vj));
      const double u_0 = u_m + w;
      const double exponent = big_a(cfg.alpha, tau, u_0) +
                              big_a(cfg.alpha, tau * std::pow(u_0 / u_m, half_alpha), u_m * (1.0 / t - 1.0));
      sum += rule.weights[i] * rule.weights[j] * jac_m * jac_w * std::exp(-exponent) * std::pow(u_m, M - 1.0);
    }
  }
  return prefactor * sum;
}

FileStpModel::FileStpModel(Scheme scheme, const NetworkConfig& cfg, const QuadratureSpec& quad)
    : FileStpModel(coefficient_table(scheme, cfg, quad), cfg, quad) {}

FileStpModel::FileStpModel(CoefficientTable table, const NetworkConfig& cfg, const QuadratureSpec& quad)
    : cfg_(cfg), table_(std::move(table)), fallback_(cfg, quad) {
  if (table_.coop_size() != cfg.coop_size) {
    throw std::invalid_argument("FileStpModel: coefficient table size does not match M");
  }
}

double FileStpModel::q_n0(double t) const {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("q_n0: t must lie in (0, 1]");
  return fallback_.value(t);
}

double FileStpModel::q_n0_derivative(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("q_n0_derivative: t must lie in [0, 1]");
  return fallback_.derivative(t);
}

double FileStpModel::q_file(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("q_file: t must lie in [0, 1]");
  const std::size_t M = cfg_.coop_size;
  if (t == 0.0) return 0.0;
  if (t == 1.0) return table_.at(M);
  const double s = 1.0 - t;
  double q2 = 0.0;
  for (std::size_t m = 1; m <= M; ++m) {
    q2 += binomial(M, m) * ipow(t, m) * ipow(s, M - m) * table_.at(m);
  }
  return ipow(s, M) * fallback_.value(t) + q2;
}

double FileStpModel::derivative(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("derivative: t must lie in [0, 1]");
  const std::size_t M = cfg_.coop_size;
  const double Md = static_cast<double>(M);
  const double s = 1.0 - t;
  const double q1 = -Md * ipow(s, M - 1) * fallback_.value(t) + ipow(s, M) * fallback_.derivative(t);
  // Bernstein derivative with q_{c,0} = 0.
  double q2 = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    const double lower = k == 0 ? 0.0 : table_.at(k);
    q2 += binomial(M - 1, k) * ipow(t, k) * ipow(s, M - 1 - k) * (table_.at(k + 1) - lower);
  }
  return q1 + Md * q2;
}

double FileStpModel::q_total(const PlacementVector& placement, const Catalog& catalog) const {
  if (placement.size() != catalog.n_files || catalog.popularity.size() != catalog.n_files) {
    throw std::invalid_argument("q_total: placement has " + std::to_string(placement.size()) +
                                " entries but the catalog has " + std::to_string(catalog.n_files) + " files");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < catalog.n_files; ++n) total += catalog.popularity[n] * q_file(placement[n]);
  return total;
}

double q_file(double t, const CoefficientTable& table, const NetworkConfig& cfg, const QuadratureSpec& quad) {
  return FileStpModel(table, cfg, quad).q_file(t);
}

double q_total(const PlacementVector& placement, const Catalog& catalog, Scheme scheme, const NetworkConfig& cfg,
               const QuadratureSpec& quad) {
  return FileStpModel(scheme, cfg, quad).q_total(placement, catalog);
}

}  // namespace stpcache
