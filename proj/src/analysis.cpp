#include "cws/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cws/errors.hpp"
#include "cws/interaction.hpp"
#include "cws/quadrature.hpp"

namespace cws {

namespace {

double limit_log_density_unnormalized(double s) { return -pow_int(s, 6) / 18.0; }

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

} // namespace

LimitLaw::LimitLaw() {
  // mass beyond |s| = 6 is exp(-2592), zero at double precision
  const double half_mass =
      integrate([](double s) { return std::exp(limit_log_density_unnormalized(s)); },
                0.0, 6.0, 1e-13);
  c_ = 1.0 / (2.0 * half_mass);

  const int knots = 6001;
  step_ = 12.0 / (knots - 1);
  cdf_table_.resize(knots);
  cdf_table_[0] = 0.0;
  const GaussRule rule = gauss_legendre(16);
  double acc = 0.0;
  for (int k = 1; k < knots; ++k) {
    const double a = -6.0 + (k - 1) * step_;
    const double b = a + step_;
    double panel = 0.0;
    for (int j = 0; j < 16; ++j) {
      const double x = 0.5 * (a + b) + 0.5 * step_ * rule.nodes[j];
      panel += 0.5 * step_ * rule.weights[j] * std::exp(limit_log_density_unnormalized(x));
    }
    acc += c_ * panel;
    cdf_table_[k] = acc;
  }
  // pin symmetry exactly: table midpoint is 0.5, endpoint 1
  const double total = cdf_table_.back();
  for (auto& v : cdf_table_) v /= total;
}

double LimitLaw::density(double s) const {
  return c_ * std::exp(limit_log_density_unnormalized(s));
}

double LimitLaw::cdf(double s) const {
  if (s <= -6.0) return 0.0;
  if (s >= 6.0) return 1.0;
  const double t = (s + 6.0) / step_;
  const int k = std::min(static_cast<int>(t), static_cast<int>(cdf_table_.size()) - 2);
  const double frac = t - k;
  return cdf_table_[k] + frac * (cdf_table_[k + 1] - cdf_table_[k]);
}

double LimitLaw::quantile(double q) const {
  if (q <= 0.0) return -6.0;
  if (q >= 1.0) return 6.0;
  auto it = std::lower_bound(cdf_table_.begin(), cdf_table_.end(), q);
  if (it == cdf_table_.begin()) return -6.0;
  const std::size_t k = (it - cdf_table_.begin()) - 1;
  const double q0 = cdf_table_[k], q1 = cdf_table_[k + 1];
  const double x0 = -6.0 + k * step_;
  return (q1 > q0) ? x0 + step_ * (q - q0) / (q1 - q0) : x0;
}

double rescale_constant(const MomentSet& ms) {
  const double kappa6 = ms.mu4 * ms.mu4 / ms.sigma2 - 0.4 * ms.mu6;
  if (!(kappa6 > 0.0))
    throw InadmissibleMeasure("rescaling needs 5 mu4^2 > 2 sigma2 mu6");
  return std::pow(kappa6, 1.0 / 6.0) / ms.sigma2;
}

std::vector<double> rescale(const std::vector<double>& s_values, const MomentSet& ms,
                            double n) {
  const double c = rescale_constant(ms) / std::pow(n, 5.0 / 6.0);
  std::vector<double> out;
  out.reserve(s_values.size());
  for (double s : s_values) out.push_back(c * s);
  return out;
}

std::vector<double> rescale(const std::vector<SampleRecord>& records,
                            const MomentSet& ms, double n) {
  const double c = rescale_constant(ms) / std::pow(n, 5.0 / 6.0);
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(c * r.s);
  return out;
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("ks_statistic needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

LlnDeviations lln_check(const std::vector<SampleRecord>& records,
                        const MomentSet& ms, double n) {
  if (records.size() < 1000)
    throw DomainError("lln_check needs at least 1000 records");
  double s = 0.0, t = 0.0, u = 0.0;
  for (const auto& r : records) {
    s += r.s;
    t += r.t;
    u += r.u;
  }
  const double cnt = static_cast<double>(records.size());
  LlnDeviations dev;
  dev.ds = std::abs(s / cnt / n);
  dev.dt = std::abs(t / cnt / n - ms.sigma2);
  dev.du = std::abs(u / cnt / n - ms.mu4);
  return dev;
}

double exponent_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw DegenerateFit("exponent fit needs >= 3 sizes");
  double mx = 0.0, my = 0.0;
  for (const auto& [n, v] : pairs) {
    mx += std::log(n);
    my += std::log(v);
  }
  mx /= pairs.size();
  my /= pairs.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : pairs) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (sxx <= 0.0) throw DegenerateFit("all n equal");
  return sxy / sxx;
}

std::optional<std::array<double, 3>> preimage_roots(double u, double v, double w) {
  if (u == 0.0) throw DomainError("preimage cubic needs u != 0");
  // X^3 + a2 X^2 + a1 X + a0
  const double a2 = -u;
  const double a1 = 0.5 * (u * u - v);
  const double a0 = u * v / 4.0 - u * u * u / 8.0 + v * v / (8.0 * u) - w / (4.0 * u);

  // depressed cubic t^3 + p t + q, X = t - a2/3
  const double shift = a2 / 3.0;
  const double p = a1 - a2 * a2 / 3.0;
  const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
  const double disc = -4.0 * p * p * p - 27.0 * q * q;
  if (!(disc > 0.0) || !(p < 0.0)) return std::nullopt; // not three distinct reals

  const double r = 2.0 * std::sqrt(-p / 3.0);
  double arg = 3.0 * q / (p * r); // = (3q)/(2p) sqrt(-3/p)
  arg = std::clamp(arg, -1.0, 1.0);
  const double theta = std::acos(arg);
  std::array<double, 3> roots;
  auto cubic = [&](double t) { return ((t + a2) * t + a1) * t + a0; };
  for (int k = 0; k < 3; ++k) {
    const double t = r * std::cos((theta - 2.0 * M_PI * k) / 3.0);
    double x = t - shift;
    // safeguarded Newton polish: keep a step only when it reduces |f|, so
    // near-double roots at the image boundary cannot be thrown far off
    double fx = cubic(x);
    for (int it = 0; it < 2 && fx != 0.0; ++it) {
      const double df = (3.0 * x + 2.0 * a2) * x + a1;
      if (df == 0.0) break;
      const double xn = x - fx / df;
      const double fn = cubic(xn);
      if (!(std::abs(fn) < std::abs(fx))) break;
      x = xn;
      fx = fn;
    }
    if (!std::isfinite(x)) throw NumericInstability("cubic root polish diverged");
    roots[k] = x;
  }
  std::sort(roots.begin(), roots.end());
  if (roots[0] == roots[1] || roots[1] == roots[2]) return std::nullopt;
  return roots;
}

double triple_density(const Measure& m, double u, double v, double w) {
  if (m.kind() != MeasureKind::density_on_interval)
    throw ConfigError("triple_density needs a density measure");
  const auto roots = preimage_roots(u, v, w);
  if (!roots) return 0.0;
  const auto& [x, y, z] = *roots;

  // forward-map residual: Vieta pins u and v, w is the real test
  const double x2 = x * x, y2 = y * y, z2 = z * z;
  const double u1 = x + y + z;
  const double v1 = x2 + y2 + z2;
  const double w1 = x2 * x2 + y2 * y2 + z2 * z2;
  const double scale = 1.0 + std::abs(u) + std::abs(v) + std::abs(w);
  const double resid = (std::abs(u1 - u) + std::abs(v1 - v) + std::abs(w1 - w)) / scale;
  if (resid >= 1e-8) {
    // inconsistent triple: outside the image set
    return 0.0;
  }

  const double fx = m.pdf(x), fy = m.pdf(y), fz = m.pdf(z);
  if (fx == 0.0 || fy == 0.0 || fz == 0.0) return 0.0;
  const double jac = 8.0 * (y - x) * (z - x) * (z - y) * (x + y + z);
  if (jac == 0.0) throw NumericInstability("vanishing Jacobian at distinct roots");
  return 6.0 * fx * fy * fz / std::abs(jac);
}

TripleIntegral triple_density_integral(const Measure& m, std::uint64_t seed,
                                       long box_samples, long triple_samples,
                                       double cap) {
  const double lo = m.lower(), hi = m.upper();
  const double ulo = 3.0 * lo, uhi = 3.0 * hi;
  const double r2 = std::max(lo * lo, hi * hi);
  const double vlo = 0.0, vhi = 3.0 * r2;
  const double wlo = 0.0, whi = 3.0 * r2 * r2;
  const double volume = (uhi - ulo) * (vhi - vlo) * (whi - wlo);

  Xoshiro256pp rng(seed);
  double capped_sum = 0.0;
  for (long i = 0; i < box_samples; ++i) {
    const double u = ulo + (uhi - ulo) * rng.uniform01();
    const double v = vlo + (vhi - vlo) * rng.uniform01();
    const double w = wlo + (whi - wlo) * rng.uniform01();
    // Theta-type constraints of sums of 3: u^2 <= 3v, v^2 <= 3w, and w <= v r^2
    if (u == 0.0 || u * u > 3.0 * v || v * v > 3.0 * w || w > v * r2) continue;
    const double f = triple_density(m, u, v, w);
    capped_sum += std::min(f, cap);
  }
  TripleIntegral out;
  out.capped_part = volume * capped_sum / static_cast<double>(box_samples);

  // exceedance correction: E[(1 - cap/f3(phi(X,Y,Z)))^+] under rho^3
  double excess_sum = 0.0;
  for (long i = 0; i < triple_samples; ++i) {
    const double x = m.draw_one(rng);
    const double y = m.draw_one(rng);
    const double z = m.draw_one(rng);
    const double u = x + y + z;
    if (u == 0.0) continue;
    const double v = x * x + y * y + z * z;
    const double w = x * x * x * x + y * y * y * y + z * z * z * z;
    const double f = triple_density(m, u, v, w);
    if (f > cap) excess_sum += 1.0 - cap / f;
  }
  out.excess_part = excess_sum / static_cast<double>(triple_samples);
  out.estimate = out.capped_part + out.excess_part;
  return out;
}

ConditionStarResult condition_star_estimate(const Measure& m, double p,
                                            std::uint64_t seed, long per_block,
                                            int blocks) {
  if (!(p >= 1.0 && p <= 2.0))
    throw DomainError("condition (*) diagnostic needs 1 <= p <= 2");
  const double lo = m.lower(), hi = m.upper();
  const double volume = pow_int(hi - lo, 3);
  Xoshiro256pp rng(seed);
  std::vector<double> means(blocks, 0.0);
  for (int b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (long i = 0; i < per_block; ++i) {
      const double x = lo + (hi - lo) * rng.uniform01();
      const double y = lo + (hi - lo) * rng.uniform01();
      const double z = lo + (hi - lo) * rng.uniform01();
      const double fp = std::pow(m.pdf(x) * m.pdf(y) * m.pdf(z), p);
      const double denom = std::abs((x + y + z) * (x - y) * (y - z) * (z - x));
      if (denom == 0.0) continue;
      sum += fp / std::pow(denom, p - 1.0);
    }
    means[b] = volume * sum / static_cast<double>(per_block);
  }
  std::sort(means.begin(), means.end());
  const double median = means[blocks / 2];
  const double q1 = means[blocks / 4];
  const double q3 = means[(3 * blocks) / 4];
  ConditionStarResult res;
  res.estimate = median;
  res.block_spread = (median > 0.0) ? (q3 - q1) / median : 1e9;
  res.verdict = res.block_spread < 0.2 ? FiniteVerdict::finite : FiniteVerdict::suspect;
  return res;
}

std::vector<HistogramBin> build_histogram(const std::vector<double>& values,
                                          double lo, double hi, int bins,
                                          long* clamped) {
  if (bins < 1 || !(lo < hi)) throw DomainError("bad histogram spec");
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    out[b].left = lo + b * width;
    out[b].right = lo + (b + 1) * width;
  }
  long clamp_count = 0;
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    if (b < 0) {
      b = 0;
      ++clamp_count;
    } else if (b >= bins) {
      if (v > hi) ++clamp_count;
      b = bins - 1;
    }
    ++out[b].count;
  }
  if (!values.empty()) {
    const double total = static_cast<double>(values.size());
    for (auto& bin : out) bin.density = bin.count / (total * width);
  }
  if (clamped) *clamped = clamp_count;
  return out;
}

FluctuationReport make_fluctuation_report(const std::vector<SampleRecord>& records,
                                          const MomentSet& ms, double n,
                                          const LimitLaw& law, int bins,
                                          double range_lo, double range_hi) {
  FluctuationReport rep;
  rep.n = n;
  rep.records_used = static_cast<long>(records.size());
  rep.rescale_const = rescale_constant(ms);
  const std::vector<double> scaled = rescale(records, ms, n);
  if (!records.empty()) {
    double s = 0.0, t = 0.0, u = 0.0;
    for (const auto& r : records) {
      s += r.s;
      t += r.t;
      u += r.u;
    }
    const double cnt = static_cast<double>(records.size());
    rep.mean_triple = {s / cnt / n, t / cnt / n, u / cnt / n};
    rep.lln.ds = std::abs(rep.mean_triple[0]);
    rep.lln.dt = std::abs(rep.mean_triple[1] - ms.sigma2);
    rep.lln.du = std::abs(rep.mean_triple[2] - ms.mu4);
    rep.ks_stat = ks_statistic(scaled, [&law](double x) { return law.cdf(x); });
  } else {
    rep.warning = "empty record set";
  }
  rep.histogram = build_histogram(scaled, range_lo, range_hi, bins, &rep.clamped);
  return rep;
}

namespace {

void write_or_throw(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOFailure("cannot open " + path);
  os << content;
  if (!os) throw IOFailure("write failed for " + path);
}

std::string histogram_csv(const FluctuationReport& rep) {
  std::string out = "bin_left,bin_right,count,density\n";
  for (const auto& b : rep.histogram) {
    if (rep.records_used == 0) break; // zero-row file for empty input
    out += fmt(b.left) + "," + fmt(b.right) + "," + std::to_string(b.count) + "," +
           fmt(b.density) + "\n";
  }
  return out;
}

std::string report_json(const FluctuationReport& rep) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"n\": " << fmt(rep.n) << ",\n";
  os << "  \"records_used\": " << rep.records_used << ",\n";
  os << "  \"clamped\": " << rep.clamped << ",\n";
  os << "  \"mean_triple\": {\"s_over_n\": " << fmt(rep.mean_triple[0])
     << ", \"t_over_n\": " << fmt(rep.mean_triple[1])
     << ", \"u_over_n\": " << fmt(rep.mean_triple[2]) << "},\n";
  os << "  \"lln_deviations\": {\"s\": " << fmt(rep.lln.ds)
     << ", \"t\": " << fmt(rep.lln.dt) << ", \"u\": " << fmt(rep.lln.du) << "},\n";
  os << "  \"ks_stat\": " << fmt(rep.ks_stat) << ",\n";
  os << "  \"rescale_constant\": " << fmt(rep.rescale_const) << ",\n";
  os << "  \"histogram_bins\": " << rep.histogram.size() << ",\n";
  os << "  \"warning\": \"" << rep.warning << "\"\n";
  os << "}\n";
  return os.str();
}

std::string overlay_svg(const FluctuationReport& rep, const LimitLaw& law) {
  const double width = 800.0, height = 500.0;
  const double ml = 60.0, mr = 20.0, mt = 20.0, mb = 40.0;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double xlo = -4.0, xhi = 4.0;
  if (!rep.histogram.empty()) {
    xlo = rep.histogram.front().left;
    xhi = rep.histogram.back().right;
  }
  double ymax = law.normalizer();
  for (const auto& b : rep.histogram) ymax = std::max(ymax, b.density);
  ymax *= 1.08;

  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double y) { return mt + ph - y / ymax * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
        "viewBox=\"0 0 800 500\">\n";
  os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  // histogram bars
  for (const auto& b : rep.histogram) {
    if (b.count == 0 || rep.records_used == 0) continue;
    os << "<rect x=\"" << fmt(px(b.left), "%.4f") << "\" y=\""
       << fmt(py(b.density), "%.4f") << "\" width=\""
       << fmt(px(b.right) - px(b.left), "%.4f") << "\" height=\""
       << fmt(py(0.0) - py(b.density), "%.4f")
       << "\" fill=\"#4477cc\" fill-opacity=\"0.65\"/>\n";
  }
  // limit density curve
  os << "<polyline fill=\"none\" stroke=\"#cc2222\" stroke-width=\"1.5\" points=\"";
  const int npts = 400;
  for (int i = 0; i <= npts; ++i) {
    const double x = xlo + (xhi - xlo) * i / npts;
    os << fmt(px(x), "%.3f") << "," << fmt(py(law.density(x)), "%.3f");
    if (i < npts) os << " ";
  }
  os << "\"/>\n";
  // axes
  os << "<line x1=\"" << fmt(ml, "%.1f") << "\" y1=\"" << fmt(mt + ph, "%.1f")
     << "\" x2=\"" << fmt(ml + pw, "%.1f") << "\" y2=\"" << fmt(mt + ph, "%.1f")
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << fmt(ml, "%.1f") << "\" y1=\"" << fmt(mt, "%.1f")
     << "\" x2=\"" << fmt(ml, "%.1f") << "\" y2=\"" << fmt(mt + ph, "%.1f")
     << "\" stroke=\"black\"/>\n";
  for (int x = static_cast<int>(std::ceil(xlo)); x <= static_cast<int>(std::floor(xhi)); ++x) {
    os << "<line x1=\"" << fmt(px(x), "%.2f") << "\" y1=\"" << fmt(mt + ph, "%.1f")
       << "\" x2=\"" << fmt(px(x), "%.2f") << "\" y2=\"" << fmt(mt + ph + 5, "%.1f")
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(px(x), "%.2f") << "\" y=\"" << fmt(mt + ph + 18, "%.1f")
       << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" << x
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace

void emit(const FluctuationReport& report, const LimitLaw& law,
          const EmitPaths& paths) {
  if (!paths.histogram_csv.empty())
    write_or_throw(paths.histogram_csv, histogram_csv(report));
  if (!paths.report_json.empty()) write_or_throw(paths.report_json, report_json(report));
  if (!paths.overlay_svg.empty()) write_or_throw(paths.overlay_svg, overlay_svg(report, law));
}

} // namespace cws
