#include "cws/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "cws/errors.hpp"

namespace cws {

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  const double eps = 1e-15;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess for the i-th root of P_n
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= eps) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

namespace {
const GaussRule& cached_rule(int order) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, gauss_legendre(order)).first;
  return it->second;
}
} // namespace

QuadTable composite_gauss(double a, double b, int panels, int order) {
  const GaussRule& rule = cached_rule(order);
  QuadTable table;
  table.x.reserve(static_cast<std::size_t>(panels) * order);
  table.w.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int k = 0; k < order; ++k) {
      table.x.push_back(mid + 0.5 * h * rule.nodes[k]);
      table.w.push_back(0.5 * h * rule.weights[k]);
    }
  }
  return table;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_panels) {
  double prev = 0.0;
  bool have_prev = false;
  for (int panels = 4; panels <= max_panels; panels *= 2) {
    const QuadTable t = composite_gauss(a, b, panels);
    double sum = 0.0;
    for (std::size_t i = 0; i < t.x.size(); ++i) sum += t.w[i] * f(t.x[i]);
    if (!std::isfinite(sum)) throw QuadratureFailure("integrand produced a non-finite value");
    if (have_prev) {
      const double scale = std::max(std::abs(sum), 1e-300);
      if (std::abs(sum - prev) <= rel_tol * scale + 1e-300) return sum;
    }
    prev = sum;
    have_prev = true;
  }
  throw QuadratureFailure("dyadic refinement did not reach the requested tolerance");
}

} // namespace cws
