#include "stpcache/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/sobol.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stpcache::quad {

namespace {

template <std::size_t N>
UnitRule make_gauss() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  static_assert(N % 2 == 0);
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  UnitRule r;
  r.nodes.reserve(N);
  r.weights.reserve(N);
  // Boost stores the nonnegative half of a symmetric rule on [-1, 1].
  for (std::size_t i = x.size(); i-- > 0;) {
    r.nodes.push_back(0.5 * (1.0 - x[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(0.5 * (1.0 + x[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

}  // namespace

const UnitRule& gauss_legendre(std::size_t n) {
  switch (n) {
    case 8: {
      static const UnitRule r = make_gauss<8>();
      return r;
    }
    case 16: {
      static const UnitRule r = make_gauss<16>();
      return r;
    }
    case 32: {
      static const UnitRule r = make_gauss<32>();
      return r;
    }
    case 64: {
      static const UnitRule r = make_gauss<64>();
      return r;
    }
    case 128: {
      static const UnitRule r = make_gauss<128>();
      return r;
    }
    default:
      throw std::invalid_argument("gauss_legendre: unsupported node count " + std::to_string(n) +
                                  " (use 8, 16, 32, 64 or 128)");
  }
}

UnitRule geometric_panels(std::size_t n, int levels) {
  const auto& base = gauss_legendre(n);
  UnitRule r;
  std::vector<double> edges{0.0};
  for (int k = levels; k >= 1; --k) edges.push_back(std::pow(10.0, -k));
  edges.push_back(1.0);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double h = edges[p + 1] - a;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      r.nodes.push_back(a + h * base.nodes[i]);
      r.weights.push_back(h * base.weights[i]);
    }
  }
  return r;
}

std::vector<double> sobol_points(std::size_t dim, std::size_t count) {
  if (dim == 0) throw std::invalid_argument("sobol_points: dim must be positive");
  boost::random::sobol engine(dim);
  std::vector<double> out(dim * count);
  constexpr double scale = 0x1p-64;
  for (auto& v : out) v = static_cast<double>(engine()) * scale;
  return out;
}

}  // namespace stpcache::quad
