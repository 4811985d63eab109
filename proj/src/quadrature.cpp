#include "skewopt/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace skewopt {

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one point");
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

Rule1D trapezoid(int n, double a, double b, bool midpoint) {
  if (n < 2) throw ValidationError("trapezoid: need at least two points");
  Rule1D r;
  if (midpoint) {
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(a + (i + 0.5) * h);
      r.weights.push_back(h);
    }
    return r;
  }
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(a + i * h);
    r.weights.push_back(i == 0 || i == n - 1 ? 0.5 * h : h);
  }
  return r;
}

SimplexRule simplex_rule(int dim, int n) {
  if (dim != 2 && dim != 3) throw ValidationError("simplex_rule: dim must be 2 or 3");
  const Rule1D g = gauss_legendre(n, 0.0, 1.0);
  SimplexRule s;
  if (dim == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double u = g.nodes[i], v = g.nodes[j];
        s.points.push_back({u, (1.0 - u) * v, 0.0});
        s.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
      }
    return s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double u = g.nodes[i], v = g.nodes[j], w = g.nodes[k];
        s.points.push_back({u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * w});
        s.weights.push_back(g.weights[i] * g.weights[j] * g.weights[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
      }
  return s;
}

}  // namespace skewopt
