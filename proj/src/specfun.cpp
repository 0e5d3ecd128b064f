#include "stpcache/specfun.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stpcache {

PathLossExponent::PathLossExponent(double alpha) : alpha_(alpha) {
  if (!(alpha > 2.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("path-loss exponent must be finite and > 2, got " + std::to_string(alpha));
  }
}

namespace {

constexpr double kSeriesLimit = 0.9;

// sum_k b/(b+k) (-theta)^k, valid for theta < 1.
double f_gauss_series(double b, double theta) {
  double power = 1.0;
  double sum = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double term = b / (b + k) * power;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    power *= -theta;
  }
  return sum;
}

// b * int_0^1 t^(b-1) / (1 + theta t) dt; with t = s^(1/b) this is
// int_0^1 ds / (1 + theta s^(1/b)), whose drop sits at the knee
// s = theta^(-b). Below the knee s = knee * y, above it s = knee * e^x, so
// both pieces are smooth on their own scale.
double f_gauss_integral(double b, double theta) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned depth = 12;
  constexpr double tol = 1e-13;
  const double p = 1.0 / b;
  const double knee = std::pow(theta, -b);
  if (knee >= 1.0) {
    return Rule::integrate([theta, p](double s) { return 1.0 / (1.0 + theta * std::pow(s, p)); }, 0.0, 1.0, depth,
                           tol);
  }
  const double inner = Rule::integrate([p](double y) { return 1.0 / (1.0 + std::pow(y, p)); }, 0.0, 1.0, depth, tol);
  const double outer = Rule::integrate([p](double x) { return std::exp(x) / (1.0 + std::exp(p * x)); }, 0.0,
                                       -std::log(knee), depth, tol);
  return knee * (inner + outer);
}

}  // namespace

double f_gauss(PathLossExponent alpha, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("f_gauss: theta must be >= 0");
  if (theta == 0.0) return 1.0;
  if (std::isinf(theta)) return 0.0;
  const double b = alpha.delta_complement();
  return theta < kSeriesLimit ? f_gauss_series(b, theta) : f_gauss_integral(b, theta);
}

double big_a(PathLossExponent alpha, double theta, double u) {
  if (u == 0.0) return 0.0;
  if (theta == 0.0) return u;
  return u * (1.0 + 2.0 * theta * f_gauss(alpha, theta) / (alpha.value() - 2.0));
}

double gamma_lower_norm(unsigned shape, double x) {
  if (shape == 0) throw std::invalid_argument("gamma_lower_norm: shape must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("gamma_lower_norm: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double L = shape;
  if (x < L) {
    // Tail of the Poisson sum: e^-x * sum_{k>=L} x^k / k!, no cancellation.
    double term = std::exp(-x + L * std::log(x) - std::lgamma(L + 1.0));
    double sum = 0.0;
    for (int k = 0; k < 100000 && term > 1e-18 * sum; ++k) {
      sum += term;
      term *= x / (L + k + 1.0);
    }
    return sum;
  }
  // 1 - e^-x * sum_{k<L} x^k / k!
  double term = std::exp(-x);
  double head = 0.0;
  for (unsigned k = 0; k < shape; ++k) {
    head += term;
    term *= x / (k + 1.0);
  }
  return 1.0 - head;
}

double alzer_beta(unsigned m) {
  if (m == 0) throw std::invalid_argument("alzer_beta: m must be >= 1");
  return std::exp(-std::lgamma(m + 1.0) / m);
}

}  // namespace stpcache
