#pragma once

namespace stpcache {

/// Path-loss exponent alpha; the interference integrals need alpha > 2.
class PathLossExponent {
 public:
  explicit PathLossExponent(double alpha);

  [[nodiscard]] double value() const noexcept { return alpha_; }
  // 1 - 2/alpha, the second parameter of the hypergeometric family used here.
  [[nodiscard]] double delta_complement() const noexcept { return 1.0 - 2.0 / alpha_; }

 private:
  double alpha_;
};

/// 2F1(1, 1 - 2/alpha; 2 - 2/alpha; -theta) for theta >= 0. Power series
/// below theta = 0.9, Euler integral above. Absolute accuracy ~1e-13.
double f_gauss(PathLossExponent alpha, double theta);

/// A(theta, u) = u * (1 + 2 theta F_G(alpha, theta) / (alpha - 2)).
///
/// The bracket is the PPP interference exponent (per unit normalized area)
/// of a Rayleigh-faded field seen beyond the normalized radius u. A is linear
/// in u, which the analytic module relies on.
double big_a(PathLossExponent alpha, double theta, double u);

/// gamma(L, x) / Gamma(L) for integer shape L >= 1 and x >= 0.
double gamma_lower_norm(unsigned shape, double x);

/// Gamma(m + 1)^(-1/m).
double alzer_beta(unsigned m);

}  // namespace stpcache
