#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stpcache/catalog.hpp"
#include "stpcache/specfun.hpp"

namespace stpcache {

/// Deployment and link parameters. The SIR threshold is linear; the
/// analytic results do not depend on `bs_density`, which only the simulator
/// uses.
struct NetworkConfig {
  double bs_density = 0.01;  // BSs per m^2
  PathLossExponent alpha{4.0};
  std::size_t coop_size = 1;  // M
  double sir_threshold = 1.0;

  void validate() const;
};

/// NCJT: no CSI. CJT_UPPER / CJT_APPROX: analytic upper bound and
/// approximation for coherent JT. CJT_EXACT: coherent JT, simulator only.
enum class Scheme { NCJT, CJT_UPPER, CJT_APPROX, CJT_EXACT };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

double db_to_linear(double db);
double linear_to_db(double linear);

/// Node budgets of the numerical integrations.
struct QuadratureSpec {
  std::size_t radial_nodes = 32;   // per panel, 1-D fallback-link integral
  int radial_levels = 8;           // geometric panels down to 1e-8
  std::size_t plane_nodes = 64;    // per axis, printed 2-D form of q_n0
  std::size_t cube_nodes = 32;     // per axis, tensor rule on the distance-ratio cube
  std::size_t tensor_max_dim = 3;  // above this the cube uses Sobol points
  std::size_t qmc_points = std::size_t{1} << 16;

  /// Every node count doubled.
  [[nodiscard]] QuadratureSpec refined() const;
};

/// Conditional STPs q_{c,m}, m = 1..M, for one (scheme, tau, alpha, M).
struct CoefficientTable {
  Scheme scheme = Scheme::NCJT;
  std::vector<double> q;  // q[m-1]

  [[nodiscard]] std::size_t coop_size() const noexcept { return q.size(); }
  [[nodiscard]] double at(std::size_t m) const { return q.at(m - 1); }
  [[nodiscard]] bool strictly_increasing() const;
};

/// Conditional STP given that none of the M nearest BSs caches the file
/// (served by the nearest holder, all M silenced), for caching probability
/// t in (0, 1].
double q_n0(double t, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

/// The same quantity evaluated from the double integral over
/// {0 < u_M < u_0 < inf} term by term, with u_0 = u_M + w and both
/// semi-infinite axes mapped to (0, 1). Used as a cross-check.
double q_n0_double_integral(double t, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

/// Serving set excludes the M-th nearest BS: m transmitters uniform inside
/// the M-th neighbour radius. Zero when m = M.
double r_m1(std::size_t m, std::size_t x, double beta, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

/// Serving set includes the M-th nearest BS plus m - 1 uniform ones inside.
double r_m2(std::size_t m, std::size_t x, double beta, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

CoefficientTable coefficient_table(Scheme scheme, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

/// q_n0 as a function of t for a fixed network: the integrand is tabulated
/// once on the quadrature nodes, so value and derivative are weighted sums.
class FallbackLinkKernel {
 public:
  FallbackLinkKernel(const NetworkConfig& cfg, const QuadratureSpec& quad);

  [[nodiscard]] double value(double t) const;       // t in [0, 1]
  [[nodiscard]] double derivative(double t) const;  // t in [0, 1]

 private:
  std::size_t coop_size_;
  double a_tau_;                    // A(tau, 1)
  std::vector<double> weight_;      // w_k * M * rho_k^(M-1)
  std::vector<double> link_;        // rho_k * A(tau rho_k^(-alpha/2), 1)
};

/// Per-file STP as a function of the caching probability, for one scheme
/// and network configuration. Precomputes the coefficient table and the
/// fallback-link integrand on its quadrature nodes; each evaluation is then a
/// short weighted sum. Immutable after construction.
class FileStpModel {
 public:
  FileStpModel(Scheme scheme, const NetworkConfig& cfg, const QuadratureSpec& quad = {});
  FileStpModel(CoefficientTable table, const NetworkConfig& cfg, const QuadratureSpec& quad = {});

  [[nodiscard]] const CoefficientTable& table() const noexcept { return table_; }
  [[nodiscard]] const NetworkConfig& network() const noexcept { return cfg_; }

  [[nodiscard]] double q_n0(double t) const;
  [[nodiscard]] double q_n0_derivative(double t) const;

  /// (1 - t)^M q_n0(t) + sum_m C(M, m) t^m (1 - t)^(M - m) q_{c,m}; 0 at t = 0.
  [[nodiscard]] double q_file(double t) const;
  /// d q_file / dt on [0, 1].
  [[nodiscard]] double derivative(double t) const;

  /// sum_n a_n q_file(T_n).
  [[nodiscard]] double q_total(const PlacementVector& placement, const Catalog& catalog) const;

 private:
  NetworkConfig cfg_;
  CoefficientTable table_;
  FallbackLinkKernel fallback_;
};

double q_file(double t, const CoefficientTable& table, const NetworkConfig& cfg, const QuadratureSpec& quad = {});
double q_total(const PlacementVector& placement, const Catalog& catalog, Scheme scheme, const NetworkConfig& cfg,
               const QuadratureSpec& quad = {});

}  // namespace stpcache
