#ifndef CWS_CONFIG_HPP
#define CWS_CONFIG_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cws/cramer.hpp"
#include "cws/measure.hpp"
#include "cws/sampler.hpp"

namespace cws {

/// One experiment configuration, read from a single JSON file (JSON is also
/// valid YAML, so configs load under either syntax). All randomness flows
/// from `seed`; chain c uses seed + c.
struct RunConfig {
  // measure
  std::string measure_kind;                           // "discrete" | "density"
  std::vector<std::pair<double, double>> atoms;       // discrete
  std::string family;                                 // named density family
  std::vector<double> log_poly;                       // inline log-density coeffs
  double support_lo = 0.0, support_hi = 0.0;
  int nodes = 2048;

  InteractionKind interaction = InteractionKind::candidate;
  ScanOrder scan = ScanOrder::systematic;

  std::vector<double> n_list{1000};
  long sweeps = 10000;
  long burn_in = 1000;
  long thin = 1;
  int chains = 4;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  // landscape / rescaled-limit checks
  GridSpec grid{{-0.5, 1.5, 5.8}, {0.5, 2.5, 7.8}, {21, 21, 21}};
  double grid_n = 1000.0;
  std::vector<double> rescaled_n_list{1e3, 1e4, 1e5};
  std::vector<std::array<double, 3>> rescaled_points{{1, 1, 1}, {0, 1, 0}, {1, 0, 0}};

  // hypothesis checks
  double check_w0 = 0.5;
  int check_points = 1000;
  std::vector<double> check_n_scaling{1, 7, 1e3, 1e6};
  int check_n_max = 50;
  double check_vanish_n = 1e9;

  // tolerances
  ExpansionTolerances expansion_tol;
  FiniteDiffPlan fd_plan;
  double ks_threshold = 0.05;
  double lln_s_const = 0.1581;  // band c * sigma * n^{-1/6}
  double lln_t_const = 0.6325;  // band c * sigma2 * n^{-1/2}
  double lln_u_const = 0.6325;  // band c * mu4 * n^{-1/2}
  double rescaled_ratio_tol = 0.05;
  double vanish_ratio_tol = 0.05;
  double scaling_identity_tol = 1e-12;

  // exact / density3
  int exact_n = 6;
  double density3_p = 1.1;
  long density3_box_samples = 40000000;
  long density3_triple_samples = 2000000;
  double density3_cap = 8.0;

  // analysis
  int histogram_bins = 120;
  double histogram_lo = -4.0;
  double histogram_hi = 4.0;
};

/// Parses the JSON config file. Unknown keys are rejected to keep committed
/// configs honest. Throws ConfigError.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

/// Builds the measure a config describes.
Measure measure_from_config(const RunConfig& cfg);

/// Canonical one-line description of the measure spec (for metadata files).
std::string measure_spec_string(const RunConfig& cfg);

} // namespace cws

#endif
