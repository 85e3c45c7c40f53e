#ifndef CWS_INTERACTION_HPP
#define CWS_INTERACTION_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "cws/measure.hpp"

namespace cws {

/// A point of the moment cone Theta = { x^2 <= y, y^2 <= z }; Theta* adds
/// y != 0. Membership is checked by the operations that need it, never
/// enforced at construction.
struct TriplePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Integer power by squaring on raw doubles.
inline double pow_int(double base, unsigned exp) {
  double r = 1.0;
  while (exp) {
    if (exp & 1u) r *= base;
    base *= base;
    exp >>= 1;
  }
  return r;
}

/// Non-strict Theta* membership with tolerance 1e-12 * max(1, y); boundary
/// points arise from discrete measures.
inline bool in_theta_star(const TriplePoint& p) {
  const double tol = 1e-12 * std::max(1.0, p.y);
  return p.y > 0.0 && p.x * p.x <= p.y + tol && p.y * p.y <= p.z + tol;
}

/// F(x, y) = x^2 / (2y).
double F(double x, double y);

/// R(x, y, z) = z x^4 / (12 y^4).
double R(const TriplePoint& p);

/// R_n(x, y, z) = (1/12) z x^4 y^5 / (y^9 + n x^10 + z x^4 y^4).
/// n is taken as a real so n = 10^9 stays exact.
double R_n(double n, const TriplePoint& p);

/// H(x, y, z) = F(x, y) + R_1(x, y, z), the model's self-interaction.
double H(const TriplePoint& p);
double H(double x, double y, double z);

/// (R - R_n) evaluated in closed form, z x^4 (n x^10 + z x^4 y^4) /
/// (12 y^4 (y^9 + n x^10 + z x^4 y^4)); avoids the cancellation of the
/// naive difference when R_n is close to R.
double r_deficit(double n, const TriplePoint& p);

/// max over points of |H(p) - F(p) - n R_n(p/n)| / (1 + |H(p)|); the scaling
/// identity is exact algebra, so anything above ~1e-14 signals a bug.
double check_scaling_identity(double n, const std::vector<TriplePoint>& points);

struct BoundViolation {
  TriplePoint point;
  double n = 0.0;
  const char* kind = ""; // "monotone", "upper", "linear"
};

struct MonotoneBoundsReport {
  std::size_t points_checked = 0;
  int n_max = 0;
  std::vector<BoundViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Verifies 0 <= R_{n+1} <= R_n <= R and R_n <= y/12 for n = 1..n_max at
/// every point. Violations become report entries, not errors.
MonotoneBoundsReport check_monotone_and_bounds(const std::vector<TriplePoint>& points,
                                               int n_max);

struct VanishingRate {
  double exact = 0.0;      // n (R - R_n) at the shifted point
  double asymptotic = 0.0; // mu4 x^4 (x^10 + sigma^8 mu4) / (12 sigma^26 n^{1/3})
};

/// Rate at which the regularization deficit vanishes along the fluctuation
/// scaling (x/n^{1/6}, sigma2 + y/sqrt(n), mu4 + z/sqrt(n)).
VanishingRate vanishing_rate(double n, double x, double y, double z,
                             const MomentSet& ms);

/// Deterministic quasi-random sample of Theta* covering both magnitude
/// regimes (x near sqrt(y) and x much smaller than y).
std::vector<TriplePoint> sample_theta_star_points(std::size_t count,
                                                  std::uint64_t seed);

} // namespace cws

#endif
