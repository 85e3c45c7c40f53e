#ifndef CWS_CRAMER_HPP
#define CWS_CRAMER_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cws/measure.hpp"

namespace cws {

/// Exponential tilting parameters (u, v, w) of the log-Laplace
/// Lambda(u,v,w) = ln int exp(u z + v z^2 + w z^4) drho(z).
using DualPoint = Eigen::Vector3d;
using PrimalPoint = Eigen::Vector3d;

/// ln int exp(u z + v z^2 + w z^4) drho(z), max-shifted for overflow safety.
double log_laplace(const Measure& m, const DualPoint& d);

/// Tilted moments f_0..f_8 in one pass; f_j = int x^j e^tilt / int e^tilt.
std::array<double, 9> tilted_moments(const Measure& m, const DualPoint& d);

double tilted_moment(const Measure& m, int j, const DualPoint& d);

/// grad Lambda = (f1, f2, f4).
Eigen::Vector3d grad_log_laplace(const Measure& m, const DualPoint& d);

/// Covariance matrix of the tilted law of (Z, Z^2, Z^4), i.e. the Hessian
/// of Lambda, assembled from f_1..f_8.
Eigen::Matrix3d hess_log_laplace(const Measure& m, const DualPoint& d);

/// One evaluation of the Cramer transform I(x,y,z) = sup_d <p,d> - Lambda(d):
/// the value, the maximizing dual, and the Hessian of I (inverse of the
/// Lambda-Hessian at the dual).
struct CramerPoint {
  PrimalPoint primal = PrimalPoint::Zero();
  DualPoint dual = DualPoint::Zero();
  double value = 0.0;
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
  bool converged = false;
  int iterations = 0;
};

/// Damped Newton maximization of the concave dual objective from the
/// origin. Convergence: ||grad Lambda(d) - p|| <= 1e-10 (1 + ||p||).
/// Divergence (iteration cap 200 or step collapse) is reported as
/// NoConvergence and is the library's proxy for "p outside the admissible
/// domain of I".
CramerPoint cramer_transform(const Measure& m, double x, double y, double z);

/// Same solver with w frozen at 0: the rate function I(x, y) of the pair
/// (Z, Z^2). Used for the lower-bound cross-check I(x,y,z) >= I(x,y).
double cramer_transform_2d(const Measure& m, double x, double y);

/// Closed-form Hessian of I at the minimum (0, sigma2, mu4).
Eigen::Matrix3d hess_cramer_at_minimum(const MomentSet& ms);

/// The non-negligible coefficients of the expansion of I around its
/// minimum, in closed form from the moments. Multi-indices are (powers of
/// x, y - sigma2, z - mu4).
struct ExpansionCoefficients {
  double c200 = 0.0; // x^2 / (2 sigma^2)
  double c210 = 0.0; // -1 / (2 sigma^4)
  double c400 = 0.0; // mu4 / (12 sigma^8)
  double A = 0.0;    // (5 mu4^2 - 2 sigma2 mu6) / (90 sigma^14)
  double q_yy = 0.0; // (mu8 - mu4^2) / (2a)
  double q_yz = 0.0; // (mu4 sigma2 - mu6) / a
  double q_zz = 0.0; // (mu4 - sigma^4) / (2a)
  // (2,0,1), (3,0,0), (3,1,0), (3,0,1), (5,0,0) are exactly zero.
  static const std::vector<std::array<int, 3>>& zero_indices();
};

ExpansionCoefficients expansion_coefficients(const MomentSet& ms);

/// q(y, z) from the expansion coefficients.
double quadratic_form(const ExpansionCoefficients& c, double y, double z);

/// Finite-difference step plan; steps are relative to the per-axis scales
/// (sigma, sigma2, mu4). hx6 is the wide step for the 6th x-derivative.
struct FiniteDiffPlan {
  double hx_rel = 0.02;
  double hy_rel = 0.02;
  double hz_rel = 0.02;
  double hx6_rel = 0.1;
};

struct ExpansionRow {
  std::string label;
  double closed_form = 0.0;
  double finite_difference = 0.0;
  double error = 0.0;     // relative for nonzero targets, |fd|/scale for zeros
  double tolerance = 0.0;
  bool pass = false;
};

struct ExpansionReport {
  std::vector<ExpansionRow> rows;
  bool pass = false;
};

/// Tolerances for the expansion verification (0.1% at order 2, 1% at
/// orders 3-4, 5% at order 6, noise floor 1e-6 for vanishing terms).
struct ExpansionTolerances {
  double order2 = 1e-3;
  double order34 = 1e-2;
  double order6 = 5e-2;
  double noise_floor = 1e-6;
};

/// Central finite differences of the numerically computed I around
/// (0, sigma2, mu4), Richardson-extrapolated, compared against every closed
/// form of the order <= 6 expansion.
ExpansionReport verify_expansion(const Measure& m,
                                 const FiniteDiffPlan& plan = {},
                                 const ExpansionTolerances& tol = {});

/// Axis-aligned evaluation grid for the landscape scan.
struct GridSpec {
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};
  std::array<int, 3> npts{};
};

struct LandscapeResult {
  GridSpec grid;
  std::vector<double> values;  // row-major (ix, iy, iz); NaN where masked
  std::vector<char> masked;    // outside Theta* or solver failure
  std::array<int, 3> argmin{};
  PrimalPoint argmin_point = PrimalPoint::Zero();
  double min_value = 0.0;
  std::size_t masked_count = 0;
};

/// Evaluates G_n = I - F - R_n over the grid. Cells outside Theta* or where
/// the solver fails are masked, not fatal.
LandscapeResult g_n_landscape(const Measure& m, double n, const GridSpec& grid);

struct RescaledLimitRow {
  std::array<double, 3> point{};
  double n = 0.0;
  double lhs = 0.0;   // n (I - F - R_n) at the shifted point
  double rhs = 0.0;   // q(y, z) + A x^6
  double ratio_err = 0.0; // |lhs/rhs - 1|
};

/// Checks n (I - F - R_n)(x/n^{1/6}, y/sqrt(n)+sigma2, z/sqrt(n)+mu4)
/// against its closed-form limit q(y,z) + A x^6 along n_list.
std::vector<RescaledLimitRow> rescaled_limit_check(
    const Measure& m, const std::vector<double>& n_list,
    const std::vector<std::array<double, 3>>& points);

} // namespace cws

#endif
