#include "cws/cramer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cws/errors.hpp"
#include "cws/finite_diff.hpp"
#include "cws/interaction.hpp"
#include "cws/parallel.hpp"

namespace cws {

namespace {

inline double tilt(double x, const DualPoint& d) {
  const double x2 = x * x;
  return d[0] * x + d[1] * x2 + d[2] * x2 * x2;
}

constexpr double kGradTol = 1e-10;
constexpr int kMaxIter = 200;

} // namespace

double log_laplace(const Measure& m, const DualPoint& d) {
  const auto& xs = m.positions();
  const auto& ws = m.masses();
  double shift = -std::numeric_limits<double>::infinity();
  for (double x : xs) shift = std::max(shift, tilt(x, d));
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    sum += ws[i] * std::exp(tilt(xs[i], d) - shift);
  if (!(sum > 0.0) || !std::isfinite(shift))
    throw QuadratureFailure("log_laplace sum degenerated");
  return shift + std::log(sum);
}

std::array<double, 9> tilted_moments(const Measure& m, const DualPoint& d) {
  const auto& xs = m.positions();
  const auto& ws = m.masses();
  double shift = -std::numeric_limits<double>::infinity();
  for (double x : xs) shift = std::max(shift, tilt(x, d));
  std::array<double, 9> num{};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ws[i] * std::exp(tilt(xs[i], d) - shift);
    double xk = e;
    for (int j = 0; j <= 8; ++j) {
      num[j] += xk;
      xk *= xs[i];
    }
  }
  if (!(num[0] > 0.0)) throw QuadratureFailure("tilted mass degenerated");
  std::array<double, 9> f{};
  for (int j = 0; j <= 8; ++j) f[j] = num[j] / num[0];
  f[0] = 1.0;
  return f;
}

double tilted_moment(const Measure& m, int j, const DualPoint& d) {
  if (j < 0 || j > 8) throw DomainError("tilted_moment supports 0 <= j <= 8");
  return tilted_moments(m, d)[j];
}

Eigen::Vector3d grad_log_laplace(const Measure& m, const DualPoint& d) {
  const auto f = tilted_moments(m, d);
  return {f[1], f[2], f[4]};
}

namespace {

Eigen::Matrix3d hess_from_moments(const std::array<double, 9>& f) {
  Eigen::Matrix3d h;
  h(0, 0) = f[2] - f[1] * f[1];
  h(0, 1) = h(1, 0) = f[3] - f[1] * f[2];
  h(0, 2) = h(2, 0) = f[5] - f[4] * f[1];
  h(1, 1) = f[4] - f[2] * f[2];
  h(1, 2) = h(2, 1) = f[6] - f[4] * f[2];
  h(2, 2) = f[8] - f[4] * f[4];
  return h;
}

} // namespace

Eigen::Matrix3d hess_log_laplace(const Measure& m, const DualPoint& d) {
  return hess_from_moments(tilted_moments(m, d));
}

CramerPoint cramer_transform(const Measure& m, double x, double y, double z) {
  // the admissible domain sits inside the cone x^2 <= y, y^2 <= z, y > 0;
  // reject the provably unreachable targets without burning iterations
  if (!in_theta_star({x, y, z}) || !(z > 0.0)) {
    std::ostringstream os;
    os << "(" << x << ", " << y << ", " << z << ") lies outside the moment cone";
    throw NoConvergence(os.str());
  }
  const PrimalPoint p(x, y, z);
  CramerPoint out;
  out.primal = p;
  DualPoint d = DualPoint::Zero();
  const double tol = kGradTol * (1.0 + p.norm());
  double phi = -log_laplace(m, d); // <p,0> - Lambda(0)

  for (int it = 0; it < kMaxIter; ++it) {
    const auto f = tilted_moments(m, d);
    const Eigen::Vector3d g(f[1], f[2], f[4]);
    const Eigen::Vector3d resid = p - g;
    const Eigen::Matrix3d hess = hess_from_moments(f);
    if (resid.norm() <= tol) {
      Eigen::LLT<Eigen::Matrix3d> llt(hess);
      if (llt.info() != Eigen::Success)
        throw SingularHessian("Lambda Hessian not positive definite at the dual");
      out.dual = d;
      out.value = p.dot(d) - log_laplace(m, d);
      if (out.value < 0.0 && out.value > -1e-12) out.value = 0.0;
      out.hessian = llt.solve(Eigen::Matrix3d::Identity());
      out.converged = true;
      out.iterations = it;
      return out;
    }
    Eigen::LLT<Eigen::Matrix3d> llt(hess);
    if (llt.info() != Eigen::Success)
      throw NoConvergence("Hessian degenerated during ascent; point at or beyond "
                          "the boundary of the admissible domain");
    const Eigen::Vector3d step = llt.solve(resid);
    if (resid.norm() <= 1e-6 * (1.0 + p.norm())) {
      // quadratic basin: the Armijo guard cannot resolve the (squared)
      // objective gain against rounding, take the plain Newton step
      d += step;
      phi = p.dot(d) - log_laplace(m, d);
      continue;
    }
    // Armijo backtracking on the concave dual objective
    const double slope = resid.dot(step);
    double t = 1.0;
    bool moved = false;
    while (t >= 1e-14) {
      const DualPoint dn = d + t * step;
      const double phin = p.dot(dn) - log_laplace(m, dn);
      if (std::isfinite(phin) && phin >= phi + 1e-4 * t * slope) {
        d = dn;
        phi = phin;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      std::ostringstream os;
      os << "dual ascent stalled at (" << x << ", " << y << ", " << z << ")";
      throw NoConvergence(os.str());
    }
  }
  std::ostringstream os;
  os << "no convergence in " << kMaxIter << " iterations at (" << x << ", " << y
     << ", " << z << "); point likely outside the admissible domain";
  throw NoConvergence(os.str());
}

double cramer_transform_2d(const Measure& m, double x, double y) {
  const Eigen::Vector2d p(x, y);
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  const double tol = kGradTol * (1.0 + p.norm());
  auto lap = [&m](const Eigen::Vector2d& dd) {
    return log_laplace(m, DualPoint(dd[0], dd[1], 0.0));
  };
  double phi = -lap(d);
  for (int it = 0; it < kMaxIter; ++it) {
    const auto f = tilted_moments(m, DualPoint(d[0], d[1], 0.0));
    const Eigen::Vector2d g(f[1], f[2]);
    const Eigen::Vector2d resid = p - g;
    if (resid.norm() <= tol) return p.dot(d) - lap(d);
    Eigen::Matrix2d hess;
    hess(0, 0) = f[2] - f[1] * f[1];
    hess(0, 1) = hess(1, 0) = f[3] - f[1] * f[2];
    hess(1, 1) = f[4] - f[2] * f[2];
    Eigen::LLT<Eigen::Matrix2d> llt(hess);
    if (llt.info() != Eigen::Success)
      throw NoConvergence("2d Hessian degenerated during ascent");
    const Eigen::Vector2d step = llt.solve(resid);
    if (resid.norm() <= 1e-6 * (1.0 + p.norm())) {
      d += step;
      phi = p.dot(d) - lap(d);
      continue;
    }
    const double slope = resid.dot(step);
    double t = 1.0;
    bool moved = false;
    while (t >= 1e-14) {
      const Eigen::Vector2d dn = d + t * step;
      const double phin = p.dot(dn) - lap(dn);
      if (std::isfinite(phin) && phin >= phi + 1e-4 * t * slope) {
        d = dn;
        phi = phin;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) throw NoConvergence("2d dual ascent stalled");
  }
  throw NoConvergence("2d transform did not converge");
}

Eigen::Matrix3d hess_cramer_at_minimum(const MomentSet& ms) {
  if (!(ms.a > 0.0)) throw DegenerateMeasure("covariance determinant a <= 0");
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(0, 0) = 1.0 / ms.sigma2;
  h(1, 1) = (ms.mu8 - ms.mu4 * ms.mu4) / ms.a;
  h(1, 2) = h(2, 1) = (ms.mu4 * ms.sigma2 - ms.mu6) / ms.a;
  h(2, 2) = (ms.mu4 - ms.sigma2 * ms.sigma2) / ms.a;
  return h;
}

const std::vector<std::array<int, 3>>& ExpansionCoefficients::zero_indices() {
  static const std::vector<std::array<int, 3>> idx = {
      {2, 0, 1}, {3, 0, 0}, {3, 1, 0}, {3, 0, 1}, {5, 0, 0}};
  return idx;
}

ExpansionCoefficients expansion_coefficients(const MomentSet& ms) {
  if (!(ms.a > 0.0)) throw DegenerateMeasure("covariance determinant a <= 0");
  ExpansionCoefficients c;
  const double s2 = ms.sigma2;
  c.c200 = 1.0 / (2.0 * s2);
  c.c210 = -1.0 / (2.0 * s2 * s2);
  c.c400 = ms.mu4 / (12.0 * pow_int(s2, 4));
  c.A = ms.criterion / (90.0 * pow_int(s2, 7));
  c.q_yy = (ms.mu8 - ms.mu4 * ms.mu4) / (2.0 * ms.a);
  c.q_yz = (ms.mu4 * s2 - ms.mu6) / ms.a;
  c.q_zz = (ms.mu4 - s2 * s2) / (2.0 * ms.a);
  return c;
}

double quadratic_form(const ExpansionCoefficients& c, double y, double z) {
  return c.q_yy * y * y + c.q_yz * y * z + c.q_zz * z * z;
}

namespace {

// Accuracy order of a symmetric central stencil of 2*half+1 points for the
// m-th derivative.
int central_accuracy(int half, int m) {
  const int n = 2 * half + 1;
  return 2 * ((n - m + 1) / 2);
}

class StencilEvaluator {
 public:
  StencilEvaluator(const Measure& m, const Eigen::Vector3d& center)
      : m_(m), center_(center) {}

  double value(const Eigen::Vector3d& offset) const {
    const Eigen::Vector3d p = center_ + offset;
    try {
      return cramer_transform(m_, p[0], p[1], p[2]).value;
    } catch (const NoConvergence&) {
      std::ostringstream os;
      os << "stencil point (" << p[0] << ", " << p[1] << ", " << p[2]
         << ") left the admissible domain";
      throw StepTooLarge(os.str());
    }
  }

  // d^m/d axis^m with a symmetric stencil at step h.
  double pure(int axis, int m, int half, double h) const {
    const auto w = fd_weights(m, central_offsets(half));
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
      if (w[i + half] == 0.0) continue;
      Eigen::Vector3d off = Eigen::Vector3d::Zero();
      off[axis] = i * h;
      sum += w[i + half] * value(off);
    }
    return sum / std::pow(h, m);
  }

  // Tensor-product mixed derivative d^{ma+mb} / d axis_a^{ma} d axis_b^{mb}.
  double mixed(int axis_a, int ma, int half_a, double ha, int axis_b, int mb,
               int half_b, double hb) const {
    const auto wa = fd_weights(ma, central_offsets(half_a));
    const auto wb = fd_weights(mb, central_offsets(half_b));
    double sum = 0.0;
    for (int i = -half_a; i <= half_a; ++i) {
      if (wa[i + half_a] == 0.0) continue;
      for (int j = -half_b; j <= half_b; ++j) {
        if (wb[j + half_b] == 0.0) continue;
        Eigen::Vector3d off = Eigen::Vector3d::Zero();
        off[axis_a] = i * ha;
        off[axis_b] = j * hb;
        sum += wa[i + half_a] * wb[j + half_b] * value(off);
      }
    }
    return sum / (std::pow(ha, ma) * std::pow(hb, mb));
  }

  // One Richardson level on top of the stencil's leading error order q.
  double pure_richardson(int axis, int m, int half, double h) const {
    const int q = central_accuracy(half, m);
    const double d1 = pure(axis, m, half, h);
    const double d2 = pure(axis, m, half, 0.5 * h);
    const double f = std::pow(2.0, q);
    return (f * d2 - d1) / (f - 1.0);
  }

  double mixed_richardson(int axis_a, int ma, int half_a, double ha, int axis_b,
                          int mb, int half_b, double hb) const {
    const int q = std::min(central_accuracy(half_a, ma), central_accuracy(half_b, mb));
    const double d1 = mixed(axis_a, ma, half_a, ha, axis_b, mb, half_b, hb);
    const double d2 = mixed(axis_a, ma, half_a, 0.5 * ha, axis_b, mb, half_b, 0.5 * hb);
    const double f = std::pow(2.0, q);
    return (f * d2 - d1) / (f - 1.0);
  }

 private:
  const Measure& m_;
  Eigen::Vector3d center_;
};

ExpansionRow make_row(const std::string& label, double closed, double fd,
                      double tol, double zero_scale) {
  ExpansionRow row;
  row.label = label;
  row.closed_form = closed;
  row.finite_difference = fd;
  row.tolerance = tol;
  if (closed != 0.0) {
    row.error = std::abs(fd - closed) / std::abs(closed);
  } else {
    row.error = std::abs(fd) / zero_scale;
  }
  row.pass = row.error <= tol;
  return row;
}

} // namespace

ExpansionReport verify_expansion(const Measure& m, const FiniteDiffPlan& plan,
                                 const ExpansionTolerances& tol) {
  const SupportReport sup = support_check(m);
  if (sup.count_class == SupportClass::lt5 || !sup.covariance_invertible)
    throw DegenerateMeasure("expansion verification needs support of >= 5 points");
  const MomentSet ms = moments(m);
  const Eigen::Vector3d center(0.0, ms.sigma2, ms.mu4);
  const StencilEvaluator ev(m, center);

  const double sigma = std::sqrt(ms.sigma2);
  const double hx = plan.hx_rel * sigma;
  const double hy = plan.hy_rel * ms.sigma2;
  const double hz = plan.hz_rel * ms.mu4;
  const double hx6 = plan.hx6_rel * sigma;

  const Eigen::Matrix3d h_closed = hess_cramer_at_minimum(ms);

  const double d4_closed = 2.0 * ms.mu4 / pow_int(ms.sigma2, 4);
  const double d6_closed =
      (40.0 * ms.mu4 * ms.mu4 - 16.0 * ms.sigma2 * ms.mu6) / pow_int(ms.sigma2, 7);
  const double scale2 = 1.0 / ms.sigma2;
  const double scale3 = 1.0 / (ms.sigma2 * ms.sigma2);
  const double scale4 = std::abs(d4_closed);
  const double scale6 = std::max(std::abs(d6_closed), 1.0 / pow_int(ms.sigma2, 7));

  ExpansionReport rep;
  auto add = [&rep](ExpansionRow row) { rep.rows.push_back(std::move(row)); };

  // order 2: the full Hessian block
  add(make_row("d2/dx2", h_closed(0, 0), ev.pure_richardson(0, 2, 2, hx), tol.order2, scale2));
  add(make_row("d2/dy2", h_closed(1, 1), ev.pure_richardson(1, 2, 2, hy), tol.order2, scale2));
  add(make_row("d2/dz2", h_closed(2, 2), ev.pure_richardson(2, 2, 2, hz), tol.order2, scale2));
  add(make_row("d2/dydz", h_closed(1, 2),
               ev.mixed_richardson(1, 1, 2, hy, 2, 1, 2, hz), tol.order2, scale2));
  add(make_row("d2/dxdy", 0.0, ev.mixed_richardson(0, 1, 2, hx, 1, 1, 2, hy),
               tol.noise_floor, scale2));
  add(make_row("d2/dxdz", 0.0, ev.mixed_richardson(0, 1, 2, hx, 2, 1, 2, hz),
               tol.noise_floor, scale2));

  // order 3
  add(make_row("d3/dx2dy", -1.0 / (ms.sigma2 * ms.sigma2),
               ev.mixed_richardson(0, 2, 2, hx, 1, 1, 2, hy), tol.order34, scale3));
  add(make_row("d3/dx3", 0.0, ev.pure_richardson(0, 3, 3, hx), tol.noise_floor, scale3));
  add(make_row("d3/dx2dz", 0.0, ev.mixed_richardson(0, 2, 2, hx, 2, 1, 3, hz),
               tol.noise_floor, scale3));

  // order 4
  add(make_row("d4/dx4", d4_closed, ev.pure_richardson(0, 4, 3, hx), tol.order34, scale4));
  add(make_row("d4/dx3dy", 0.0, ev.mixed_richardson(0, 3, 3, hx, 1, 1, 2, hy),
               tol.noise_floor, scale4));
  add(make_row("d4/dx3dz", 0.0, ev.mixed_richardson(0, 3, 3, hx, 2, 1, 2, hz),
               tol.noise_floor, scale4));

  // orders 5 and 6: wide steps, 9-point stencil plus one Richardson level
  add(make_row("d5/dx5", 0.0, ev.pure_richardson(0, 5, 4, hx6), tol.noise_floor, scale6));
  add(make_row("d6/dx6", d6_closed, ev.pure_richardson(0, 6, 4, hx6), tol.order6, scale6));

  rep.pass = true;
  for (const auto& row : rep.rows) rep.pass = rep.pass && row.pass;
  return rep;
}

LandscapeResult g_n_landscape(const Measure& m, double n, const GridSpec& grid) {
  LandscapeResult res;
  res.grid = grid;
  const int nx = grid.npts[0], ny = grid.npts[1], nz = grid.npts[2];
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("landscape grid needs npts >= 1");
  const std::size_t total = static_cast<std::size_t>(nx) * ny * nz;
  res.values.assign(total, std::numeric_limits<double>::quiet_NaN());
  res.masked.assign(total, 0);

  auto coord = [&grid](int axis, int i) {
    const int npts = grid.npts[axis];
    if (npts == 1) return grid.lo[axis];
    return grid.lo[axis] +
           (grid.hi[axis] - grid.lo[axis]) * static_cast<double>(i) / (npts - 1);
  };

  parallel_for(static_cast<std::size_t>(nx), [&](std::size_t ix) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int iz = 0; iz < nz; ++iz) {
        const std::size_t idx = (ix * ny + iy) * nz + iz;
        const TriplePoint p{coord(0, static_cast<int>(ix)), coord(1, iy), coord(2, iz)};
        if (!in_theta_star(p)) {
          res.masked[idx] = 1;
          continue;
        }
        try {
          const CramerPoint cp = cramer_transform(m, p.x, p.y, p.z);
          res.values[idx] = cp.value - F(p.x, p.y) - R_n(n, p);
        } catch (const NoConvergence&) {
          res.masked[idx] = 1;
        } catch (const SingularHessian&) {
          res.masked[idx] = 1;
        }
      }
    }
  });

  double best = std::numeric_limits<double>::infinity();
  std::array<int, 3> best_idx{0, 0, 0};
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      for (int iz = 0; iz < nz; ++iz) {
        const std::size_t idx = (static_cast<std::size_t>(ix) * ny + iy) * nz + iz;
        if (res.masked[idx]) {
          ++res.masked_count;
          continue;
        }
        if (res.values[idx] < best) {
          best = res.values[idx];
          best_idx = {ix, iy, iz};
        }
      }
  if (!std::isfinite(best)) throw NoConvergence("every landscape cell is masked");
  res.argmin = best_idx;
  res.argmin_point =
      PrimalPoint(coord(0, best_idx[0]), coord(1, best_idx[1]), coord(2, best_idx[2]));
  res.min_value = best;
  return res;
}

std::vector<RescaledLimitRow> rescaled_limit_check(
    const Measure& m, const std::vector<double>& n_list,
    const std::vector<std::array<double, 3>>& points) {
  const MomentSet ms = moments(m);
  const auto& [crit_value, admissible] = criterion_report(ms);
  (void)crit_value;
  if (!admissible) throw InadmissibleMeasure("rescaled limit needs 5 mu4^2 > 2 sigma2 mu6");
  const ExpansionCoefficients coef = expansion_coefficients(ms);

  std::vector<RescaledLimitRow> rows;
  for (const auto& pt : points) {
    const double rhs = quadratic_form(coef, pt[1], pt[2]) + coef.A * pow_int(pt[0], 6);
    for (double n : n_list) {
      RescaledLimitRow row;
      row.point = pt;
      row.n = n;
      const double n6 = std::pow(n, 1.0 / 6.0);
      const double sq = std::sqrt(n);
      const TriplePoint s{pt[0] / n6, pt[1] / sq + ms.sigma2, pt[2] / sq + ms.mu4};
      const CramerPoint cp = cramer_transform(m, s.x, s.y, s.z);
      row.lhs = n * (cp.value - F(s.x, s.y) - R_n(n, s));
      row.rhs = rhs;
      row.ratio_err = (rhs != 0.0) ? std::abs(row.lhs / rhs - 1.0) : std::abs(row.lhs);
      rows.push_back(row);
    }
  }
  return rows;
}

} // namespace cws
