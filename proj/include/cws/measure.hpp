#ifndef CWS_MEASURE_HPP
#define CWS_MEASURE_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cws/rng.hpp"

namespace cws {

/// Even moments of a base measure plus the derived quantities the model
/// cares about: the admissibility criterion 5*mu4^2 - 2*sigma2*mu6 and the
/// covariance determinant a = (mu4-sigma2^2)(mu8-mu4^2) - (mu6-sigma2*mu4)^2.
struct MomentSet {
  double sigma2 = 0.0;
  double mu4 = 0.0;
  double mu6 = 0.0;
  double mu8 = 0.0;
  double criterion = 0.0;
  double a = 0.0;
};

enum class MeasureKind { discrete_atoms, density_on_interval };

enum class SupportClass { lt5, ge5 };

struct SupportReport {
  SupportClass count_class = SupportClass::lt5;
  bool covariance_invertible = false;
};

/// A symmetric-capable base probability measure rho: either a finite list of
/// atoms, or a density on a bounded interval held as a normalized composite
/// Gauss-Legendre table (built adaptively at construction to 1e-10 relative
/// accuracy on mass and moments up to order 8). All downstream integrals are
/// weighted sums over support(); density measures additionally carry an
/// inverse-CDF table (4096 knots, monotone linear interpolation) for
/// sampling. Immutable after construction; safe to share across threads.
class Measure {
 public:
  /// Atoms are kept in the caller's order (the cumulative sampling table
  /// depends on it, which mirrored-chain tests rely on). Asymmetric inputs
  /// are allowed and flagged, not rejected.
  static Measure discrete(const std::vector<std::pair<double, double>>& atoms);

  /// log_density need not be normalized; mass is normalized internally.
  static Measure density(std::function<double(double)> log_density,
                         double lower, double upper, int nodes);

  MeasureKind kind() const { return kind_; }
  bool symmetric() const { return symmetric_; }

  /// Support positions and their probability masses (atoms, or quadrature
  /// nodes with normalized weights).
  const std::vector<double>& positions() const { return pos_; }
  const std::vector<double>& masses() const { return mass_; }

  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// Normalized density value; only meaningful for density measures
  /// (0 outside the support interval).
  double pdf(double x) const;

  double draw_one(Xoshiro256pp& rng) const;

  std::string describe() const;

 private:
  Measure() = default;

  MeasureKind kind_ = MeasureKind::discrete_atoms;
  bool symmetric_ = false;
  std::vector<double> pos_;
  std::vector<double> mass_;
  std::vector<double> cum_;      // cumulative masses, for discrete inversion
  double lower_ = 0.0, upper_ = 0.0;
  std::function<double(double)> log_density_;
  double log_norm_ = 0.0;        // log of the raw density mass
  // density sampling: piecewise-linear CDF through (cdf_x_, cdf_q_) with a
  // quantile guide table accelerating the segment lookup
  std::vector<double> cdf_x_;
  std::vector<double> cdf_q_;
  std::vector<int> guide_;
};

Measure make_discrete(const std::vector<std::pair<double, double>>& atoms);
Measure make_density(std::function<double(double)> log_density, double lower,
                     double upper, int nodes);

/// Moments by exact weighted sums over the measure's support table.
MomentSet moments(const Measure& m);

/// value = 5*mu4^2 - 2*sigma2*mu6; admissible iff value > 0.
std::pair<double, bool> criterion_report(const MomentSet& ms);

SupportReport support_check(const Measure& m);

/// True when int exp(w0 z^4) drho(z) is finite. Every representable measure
/// has bounded support, so this holds unconditionally; untruncated laws are
/// outside the library's domain by construction.
bool integrability_check(const Measure& m, double w0);

std::vector<double> draw(const Measure& m, Xoshiro256pp& rng, int count);

} // namespace cws

#endif
