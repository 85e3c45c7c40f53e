#ifndef CWS_QUADRATURE_HPP
#define CWS_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace cws {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Computes the n-point Gauss-Legendre rule (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

/// Composite quadrature table: node positions and weights on [a, b],
/// `panels` equal panels with a fixed-order rule per panel.
struct QuadTable {
  std::vector<double> x;
  std::vector<double> w;
};

QuadTable composite_gauss(double a, double b, int panels, int order = 16);

/// Integrates f over [a, b] by composite Gauss-Legendre with dyadic panel
/// refinement until two consecutive levels agree to rel_tol (plus an
/// absolute floor for integrals near zero). Throws QuadratureFailure if the
/// tolerance is not reached at max_panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, int max_panels = 1 << 16);

} // namespace cws

#endif
