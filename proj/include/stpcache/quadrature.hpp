#pragma once

#include <cstddef>
#include <vector>

namespace stpcache::quad {

/// Nodes and weights of a rule on [0, 1].
struct UnitRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule mapped to [0, 1]. Supported sizes: 8, 16, 32, 64, 128.
const UnitRule& gauss_legendre(std::size_t n);

/// Composite rule on [0, 1] whose panels are [0, 10^-levels], ...,
/// [10^-2, 10^-1], [10^-1, 1], each carrying `n` Gauss-Legendre nodes.
UnitRule geometric_panels(std::size_t n, int levels);

/// First `count` points of the Sobol sequence in `dim` dimensions
/// (row-major, the all-zero point skipped).
std::vector<double> sobol_points(std::size_t dim, std::size_t count);

}  // namespace stpcache::quad
