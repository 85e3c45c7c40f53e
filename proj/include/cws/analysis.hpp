#ifndef CWS_ANALYSIS_HPP
#define CWS_ANALYSIS_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cws/measure.hpp"
#include "cws/rng.hpp"
#include "cws/sampler.hpp"

namespace cws {

/// The sextic limit law C exp(-s^6/18) of the rescaled sum, with
/// C = (81/2)^{1/6} / Gamma(1/6). The normalizer and the CDF table are
/// computed by quadrature of the density itself; the CDF table spans
/// [-6, 6] and linear interpolation keeps it accurate to ~2e-7.
class LimitLaw {
 public:
  LimitLaw();

  double normalizer() const { return c_; }
  double density(double s) const;
  double cdf(double s) const;
  double quantile(double q) const;

 private:
  double c_ = 0.0;
  std::vector<double> cdf_table_; // knots at -6 + k*step
  double step_ = 0.0;
};

/// (mu4^2/sigma2 - 2 mu6/5)^{1/6} / sigma2; requires an admissible measure.
double rescale_constant(const MomentSet& ms);

/// s -> (mu4^2/sigma2 - 2 mu6/5)^{1/6} s / (sigma2 n^{5/6}).
std::vector<double> rescale(const std::vector<double>& s_values, const MomentSet& ms,
                            double n);
std::vector<double> rescale(const std::vector<SampleRecord>& records,
                            const MomentSet& ms, double n);

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

struct LlnDeviations {
  double ds = 0.0; // |mean s/n - 0|
  double dt = 0.0; // |mean t/n - sigma2|
  double du = 0.0; // |mean u/n - mu4|
};

LlnDeviations lln_check(const std::vector<SampleRecord>& records,
                        const MomentSet& ms, double n);

/// Least-squares slope of log(mean |s|) against log n.
double exponent_fit(const std::vector<std::pair<double, double>>& pairs);

/// Real roots of the Prop-7 cubic for the triple (u, v, w); empty when the
/// cubic does not have three distinct real roots.
std::optional<std::array<double, 3>> preimage_roots(double u, double v, double w);

/// Density of (X+Y+Z, X^2+Y^2+Z^2, X^4+Y^4+Z^4) for i.i.d. X, Y, Z ~ rho,
/// via the cubic preimage and the Jacobian 8(y-x)(z-x)(z-y)(x+y+z).
/// Returns 0 outside the image set; requires u != 0.
double triple_density(const Measure& m, double u, double v, double w);

/// Monte Carlo integral of triple_density over a covering box, split into a
/// capped part plus an exact exceedance correction sampled from rho^3
/// (the cap keeps the box estimator's variance finite).
struct TripleIntegral {
  double estimate = 0.0;
  double capped_part = 0.0;
  double excess_part = 0.0;
};

TripleIntegral triple_density_integral(const Measure& m, std::uint64_t seed,
                                       long box_samples = 40000000,
                                       long triple_samples = 2000000,
                                       double cap = 8.0);

enum class FiniteVerdict { finite, suspect };

struct ConditionStarResult {
  double estimate = 0.0;
  FiniteVerdict verdict = FiniteVerdict::suspect;
  double block_spread = 0.0; // IQR of block means over their median
};

/// Median-of-means diagnostic for the integral (*) with exponent p; 32
/// blocks, verdict "finite" when the block means stabilize. A diagnostic,
/// not a proof.
ConditionStarResult condition_star_estimate(const Measure& m, double p,
                                            std::uint64_t seed,
                                            long per_block = 100000,
                                            int blocks = 32);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
  double density = 0.0;
};

/// Fixed-range histogram; values outside the range are clamped into the
/// edge bins so counts always sum to the number of values.
std::vector<HistogramBin> build_histogram(const std::vector<double>& values,
                                          double lo, double hi, int bins,
                                          long* clamped = nullptr);

struct FluctuationReport {
  double n = 0;
  long records_used = 0;
  long clamped = 0;
  std::array<double, 3> mean_triple{}; // (s/n, t/n, u/n)
  LlnDeviations lln;
  double ks_stat = 0.0;
  double rescale_const = 0.0;
  std::vector<HistogramBin> histogram;
  std::string warning;
};

FluctuationReport make_fluctuation_report(const std::vector<SampleRecord>& records,
                                          const MomentSet& ms, double n,
                                          const LimitLaw& law, int bins = 120,
                                          double range_lo = -4.0,
                                          double range_hi = 4.0);

struct EmitPaths {
  std::string histogram_csv;
  std::string report_json;
  std::string overlay_svg;
};

/// Writes the histogram CSV (`bin_left,bin_right,count,density`), the
/// report JSON, and a self-contained SVG overlaying the histogram with the
/// limit density. Outputs are byte-identical across runs for a fixed report.
void emit(const FluctuationReport& report, const LimitLaw& law,
          const EmitPaths& paths);

} // namespace cws

#endif
