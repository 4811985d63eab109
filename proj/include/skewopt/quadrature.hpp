#pragma once

#include <vector>

#include "skewopt/common.hpp"

namespace skewopt {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite trapezoid rule with n points on [a, b]; with `midpoint` the
/// nodes are cell midpoints instead (both ends excluded).
Rule1D trapezoid(int n, double a, double b, bool midpoint = false);

/// Quadrature on the reference simplex (origin plus unit axis vertices).
/// Points are reference coordinates, weights sum to 1/2 or 1/6.
struct SimplexRule {
  std::vector<Point> points;
  std::vector<double> weights;
};

/// Collapsed (Duffy) tensor Gauss rule with n points per direction; exact for
/// polynomials of degree 2n - 1 - dim or better.
SimplexRule simplex_rule(int dim, int n);

}  // namespace skewopt
