#include "cws/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cws/errors.hpp"
#include "cws/quadrature.hpp"

namespace cws {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kSymTolDiscrete = 1e-12;
constexpr double kSymTolDensity = 1e-10;
constexpr int kInvCdfKnots = 4096;

bool negation_closed(const std::vector<std::pair<double, double>>& atoms) {
  // Atom set closed under negation with equal weights. Compare against a
  // position-sorted copy so the listed order does not matter.
  std::vector<std::pair<double, double>> sorted(atoms);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [p, w] = sorted[i];
    const auto& [q, v] = sorted[n - 1 - i];
    if (std::abs(p + q) > kSymTolDiscrete * std::max(1.0, std::abs(p))) return false;
    if (std::abs(w - v) > kSymTolDiscrete) return false;
  }
  return true;
}

std::vector<double> table_moments(const std::vector<double>& pos,
                                  const std::vector<double>& mass) {
  std::vector<double> mom(9, 0.0);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    double xk = mass[i];
    for (int k = 0; k <= 8; ++k) {
      mom[k] += xk;
      xk *= pos[i];
    }
  }
  return mom;
}

} // namespace

Measure Measure::discrete(const std::vector<std::pair<double, double>>& atoms) {
  if (atoms.empty()) throw NotAProbability("no atoms");
  double total = 0.0;
  bool has_nonzero_position = false;
  for (const auto& [p, w] : atoms) {
    if (!std::isfinite(p) || !std::isfinite(w)) throw NonFinite("non-finite atom");
    if (w < 0.0) throw NotAProbability("negative weight");
    total += w;
    if (p != 0.0 && w > 0.0) has_nonzero_position = true;
  }
  if (std::abs(total - 1.0) > kWeightTol)
    throw NotAProbability("weights sum to " + std::to_string(total));
  if (!has_nonzero_position) throw DiracAtZero("only mass at position 0");

  Measure m;
  m.kind_ = MeasureKind::discrete_atoms;
  m.pos_.reserve(atoms.size());
  m.mass_.reserve(atoms.size());
  for (const auto& [p, w] : atoms) {
    m.pos_.push_back(p);
    m.mass_.push_back(w);
  }
  m.cum_.resize(atoms.size());
  double c = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    c += m.mass_[i];
    m.cum_[i] = c;
  }
  m.cum_.back() = 1.0;
  auto [lo, hi] = std::minmax_element(m.pos_.begin(), m.pos_.end());
  m.lower_ = *lo;
  m.upper_ = *hi;
  m.symmetric_ = negation_closed(atoms);
  return m;
}

Measure Measure::density(std::function<double(double)> log_density,
                         double lower, double upper, int nodes) {
  if (!(lower < upper)) throw ConfigError("density support requires lower < upper");
  if (nodes < 64) throw ConfigError("density measures need at least 64 nodes");

  Measure m;
  m.kind_ = MeasureKind::density_on_interval;
  m.lower_ = lower;
  m.upper_ = upper;
  m.log_density_ = std::move(log_density);

  // Dyadic panel refinement: accept a table once mass and moments up to
  // order 8 are stable to 1e-10 relative between consecutive levels.
  int panels = 4;
  while (panels * 16 < nodes) panels *= 2;
  std::vector<double> prev_mom;
  QuadTable accepted;
  double accepted_shift = 0.0, accepted_raw_mass = 0.0;
  bool done = false;
  for (; panels <= (1 << 16); panels *= 2) {
    QuadTable t = composite_gauss(lower, upper, panels);
    std::vector<double> logf(t.x.size());
    double shift = -1e308;
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      const double v = m.log_density_(t.x[i]);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
        throw NonFinite("log-density is NaN or +inf at a quadrature node");
      logf[i] = v;
      shift = std::max(shift, v);
    }
    if (!std::isfinite(shift)) throw ZeroMass("density vanishes on the whole support");
    double raw = 0.0;
    std::vector<double> w(t.x.size());
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      w[i] = t.w[i] * std::exp(logf[i] - shift);
      raw += w[i];
    }
    if (raw <= 0.0) throw ZeroMass("density mass is zero");
    for (auto& wi : w) wi /= raw;
    std::vector<double> mom = table_moments(t.x, w);
    if (!prev_mom.empty()) {
      bool stable = true;
      for (int k = 1; k <= 8; ++k) {
        const double scale = std::max(std::abs(mom[k]), std::pow(mom[8], k / 8.0));
        if (std::abs(mom[k] - prev_mom[k]) > 1e-10 * std::max(scale, 1e-300)) {
          stable = false;
          break;
        }
      }
      if (stable) {
        accepted = std::move(t);
        m.mass_ = std::move(w);
        accepted_shift = shift;
        accepted_raw_mass = raw;
        done = true;
        break;
      }
    }
    prev_mom = std::move(mom);
  }
  if (!done) throw QuadratureFailure("moment table did not stabilize at max refinement");
  m.pos_ = std::move(accepted.x);
  m.log_norm_ = accepted_shift + std::log(accepted_raw_mass);

  // Symmetry: interval [-b, b] and even density at paired nodes. The
  // composite table is symmetric by construction, so node i pairs with
  // node N-1-i.
  const double width = upper - lower;
  m.symmetric_ = std::abs(lower + upper) <= kSymTolDiscrete * width;
  if (m.symmetric_) {
    const std::size_t n = m.pos_.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double a = m.mass_[i], b = m.mass_[n - 1 - i];
      if (std::abs(a - b) > kSymTolDensity * std::max(a, b)) {
        m.symmetric_ = false;
        break;
      }
    }
  }

  // Not the Dirac mass at zero: some mass away from 0. A density table
  // always has it unless the mass degenerates numerically.
  double off_zero = 0.0;
  for (std::size_t i = 0; i < m.pos_.size(); ++i)
    if (std::abs(m.pos_[i]) > 0.0) off_zero += m.mass_[i];
  if (off_zero <= 0.0) throw DiracAtZero("no mass away from 0");

  // Inverse-CDF sampling table: piecewise-linear CDF through midpoint
  // cumulative values at the nodes, plus a 4096-knot quantile guide table
  // that jump-starts the segment lookup. Sampling bias is bounded by the
  // node spacing, not the quantile grid.
  const std::size_t n = m.pos_.size();
  m.cdf_x_.resize(n + 2);
  m.cdf_q_.resize(n + 2);
  m.cdf_x_[0] = lower;
  m.cdf_q_[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m.cdf_x_[i + 1] = m.pos_[i];
    m.cdf_q_[i + 1] = acc + 0.5 * m.mass_[i];
    acc += m.mass_[i];
  }
  m.cdf_x_[n + 1] = upper;
  m.cdf_q_[n + 1] = 1.0;
  m.guide_.resize(kInvCdfKnots + 1);
  std::size_t seg = 0;
  for (int k = 0; k <= kInvCdfKnots; ++k) {
    const double q = static_cast<double>(k) / kInvCdfKnots;
    while (seg + 1 < m.cdf_q_.size() - 1 && m.cdf_q_[seg + 1] < q) ++seg;
    m.guide_[k] = static_cast<int>(seg);
  }
  return m;
}

double Measure::pdf(double x) const {
  if (kind_ != MeasureKind::density_on_interval) return 0.0;
  if (x < lower_ || x > upper_) return 0.0;
  return std::exp(log_density_(x) - log_norm_);
}

double Measure::draw_one(Xoshiro256pp& rng) const {
  const double u = rng.uniform01();
  if (kind_ == MeasureKind::discrete_atoms) {
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    const std::size_t idx = std::min<std::size_t>(it - cum_.begin(), pos_.size() - 1);
    return pos_[idx];
  }
  const int k = std::min(static_cast<int>(u * kInvCdfKnots), kInvCdfKnots - 1);
  std::size_t seg = static_cast<std::size_t>(guide_[k]);
  const std::size_t last = cdf_q_.size() - 2;
  while (seg < last && cdf_q_[seg + 1] < u) ++seg;
  const double q0 = cdf_q_[seg], q1 = cdf_q_[seg + 1];
  const double x0 = cdf_x_[seg], x1 = cdf_x_[seg + 1];
  return (q1 > q0) ? x0 + (x1 - x0) * (u - q0) / (q1 - q0) : x0;
}

std::string Measure::describe() const {
  std::ostringstream os;
  if (kind_ == MeasureKind::discrete_atoms) {
    os << "discrete(" << pos_.size() << " atoms on [" << lower_ << ", " << upper_ << "])";
  } else {
    os << "density(" << pos_.size() << " nodes on [" << lower_ << ", " << upper_ << "])";
  }
  if (symmetric_) os << " symmetric";
  return os.str();
}

Measure make_discrete(const std::vector<std::pair<double, double>>& atoms) {
  return Measure::discrete(atoms);
}

Measure make_density(std::function<double(double)> log_density, double lower,
                     double upper, int nodes) {
  return Measure::density(std::move(log_density), lower, upper, nodes);
}

MomentSet moments(const Measure& m) {
  const std::vector<double> mom = table_moments(m.positions(), m.masses());
  MomentSet ms;
  ms.sigma2 = mom[2];
  ms.mu4 = mom[4];
  ms.mu6 = mom[6];
  ms.mu8 = mom[8];
  ms.criterion = 5.0 * ms.mu4 * ms.mu4 - 2.0 * ms.sigma2 * ms.mu6;
  ms.a = (ms.mu4 - ms.sigma2 * ms.sigma2) * (ms.mu8 - ms.mu4 * ms.mu4) -
         (ms.mu6 - ms.sigma2 * ms.mu4) * (ms.mu6 - ms.sigma2 * ms.mu4);
  return ms;
}

std::pair<double, bool> criterion_report(const MomentSet& ms) {
  return {ms.criterion, ms.criterion > 0.0};
}

SupportReport support_check(const Measure& m) {
  SupportReport rep;
  if (m.kind() == MeasureKind::density_on_interval) {
    rep.count_class = SupportClass::ge5;
  } else {
    int count = 0;
    for (std::size_t i = 0; i < m.positions().size(); ++i)
      if (m.masses()[i] > 0.0) ++count;
    rep.count_class = count >= 5 ? SupportClass::ge5 : SupportClass::lt5;
  }
  const MomentSet ms = moments(m);
  const double m1 = ms.mu4 - ms.sigma2 * ms.sigma2;
  const double m2 = ms.mu8 - ms.mu4 * ms.mu4;
  const double m3 = ms.mu6 - ms.sigma2 * ms.mu4;
  const double scale = std::abs(m1 * m2) + m3 * m3;
  rep.covariance_invertible = ms.a > 1e-10 * std::max(scale, 1e-300);
  return rep;
}

bool integrability_check(const Measure& m, double w0) {
  if (!(w0 > 0.0)) throw DomainError("integrability_check needs w0 > 0");
  (void)m; // bounded support by construction
  return true;
}

std::vector<double> draw(const Measure& m, Xoshiro256pp& rng, int count) {
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(m.draw_one(rng));
  return out;
}

} // namespace cws
