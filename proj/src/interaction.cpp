#include "cws/interaction.hpp"

#include <cmath>

#include "cws/errors.hpp"

namespace cws {

double F(double x, double y) {
  if (y == 0.0) throw DomainError("F needs y != 0");
  return x * x / (2.0 * y);
}

double R(const TriplePoint& p) {
  if (p.y == 0.0) throw DomainError("R needs y != 0");
  const double x4 = pow_int(p.x, 4);
  return p.z * x4 / (12.0 * pow_int(p.y, 4));
}

namespace {

// y^9 + n x^10 + z x^4 y^4, summed smallest-magnitude first to limit
// rounding in the mixed-scale regime.
inline double rn_denominator(double n, double x, double y, double z) {
  const double t1 = pow_int(y, 9);
  const double t2 = n * pow_int(x, 10);
  const double x4 = pow_int(x, 4);
  const double t3 = z * x4 * pow_int(y, 4);
  double a = t1, b = t2, c = t3;
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return (a + b) + c;
}

} // namespace

double R_n(double n, const TriplePoint& p) {
  if (p.x == 0.0) return 0.0; // short-circuit 0^10 underflow paths
  const double den = rn_denominator(n, p.x, p.y, p.z);
  if (!(den > 0.0)) throw DomainError("R_n denominator must be positive");
  return p.z * pow_int(p.x, 4) * pow_int(p.y, 5) / (12.0 * den);
}

double H(const TriplePoint& p) {
  return F(p.x, p.y) + R_n(1.0, p);
}

double H(double x, double y, double z) { return H(TriplePoint{x, y, z}); }

double r_deficit(double n, const TriplePoint& p) {
  if (p.x == 0.0) return 0.0;
  if (p.y == 0.0) throw DomainError("r_deficit needs y != 0");
  const double x4 = pow_int(p.x, 4);
  const double num = p.z * x4 * (n * pow_int(p.x, 10) + p.z * x4 * pow_int(p.y, 4));
  const double den = 12.0 * pow_int(p.y, 4) * rn_denominator(n, p.x, p.y, p.z);
  return num / den;
}

double check_scaling_identity(double n, const std::vector<TriplePoint>& points) {
  double worst = 0.0;
  for (const TriplePoint& p : points) {
    const double lhs = R_n(1.0, p); // = H(p) - F(p.x, p.y) by definition
    const TriplePoint q{p.x / n, p.y / n, p.z / n};
    const double rhs = n * R_n(n, q);
    const double dev = std::abs(lhs - rhs) / (1.0 + std::abs(H(p)));
    worst = std::max(worst, dev);
  }
  return worst;
}

MonotoneBoundsReport check_monotone_and_bounds(const std::vector<TriplePoint>& points,
                                               int n_max) {
  MonotoneBoundsReport rep;
  rep.points_checked = points.size();
  rep.n_max = n_max;
  for (const TriplePoint& p : points) {
    const double upper = R(p);
    const double linear = p.y / 12.0;
    double prev = upper;
    for (int n = 1; n <= n_max; ++n) {
      const double rn = R_n(static_cast<double>(n), p);
      if (rn < 0.0 || rn > prev * (1.0 + 1e-14) + 1e-300)
        rep.violations.push_back({p, static_cast<double>(n), "monotone"});
      if (rn > upper * (1.0 + 1e-14) + 1e-300)
        rep.violations.push_back({p, static_cast<double>(n), "upper"});
      if (rn > linear * (1.0 + 1e-14) + 1e-300)
        rep.violations.push_back({p, static_cast<double>(n), "linear"});
      prev = rn;
    }
  }
  return rep;
}

std::vector<TriplePoint> sample_theta_star_points(std::size_t count,
                                                  std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  std::vector<TriplePoint> out;
  out.reserve(count);
  while (out.size() < count) {
    double x = -1.5 + 3.0 * rng.uniform01();
    if (std::abs(x) < 1e-8) x = 0.3;
    double y = 0.0;
    switch (out.size() % 3) {
      case 0: // boundary regime, x close to sqrt(y)
        y = x * x * (1.0 + 1e-6 + rng.uniform01());
        break;
      case 1: // generic interior
        y = x * x + 0.1 + 3.0 * rng.uniform01();
        break;
      default: // x much smaller than y
        y = std::max(x * x, 1e-3) * (1.0 + 30.0 * rng.uniform01());
        break;
    }
    const double z = y * y * (1.0 + 2.0 * rng.uniform01()) + 0.5 * rng.uniform01();
    out.push_back({x, y, z});
  }
  return out;
}

VanishingRate vanishing_rate(double n, double x, double y, double z,
                             const MomentSet& ms) {
  VanishingRate out;
  if (x == 0.0) return out;
  const double n6 = std::pow(n, 1.0 / 6.0);
  const TriplePoint shifted{x / n6, y / std::sqrt(n) + ms.sigma2,
                            z / std::sqrt(n) + ms.mu4};
  if (!(shifted.y > 0.0)) throw DomainError("shifted point leaves y > 0");
  out.exact = n * r_deficit(n, shifted);
  const double sigma8 = pow_int(ms.sigma2, 4);
  const double sigma26 = pow_int(ms.sigma2, 13);
  out.asymptotic = ms.mu4 * pow_int(x, 4) * (pow_int(x, 10) + sigma8 * ms.mu4) /
                   (12.0 * sigma26 * std::cbrt(n));
  return out;
}

} // namespace cws
