#include "cws/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cws/errors.hpp"

namespace cws {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& known,
                  const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + key + "\": " + e.what());
  }
}

void parse_measure(const json& j, RunConfig& cfg) {
  require_keys(j, {"kind", "atoms", "family", "log_poly", "support", "nodes"},
               "measure");
  cfg.measure_kind = get_or<std::string>(j, "kind", "");
  if (cfg.measure_kind == "discrete") {
    if (!j.contains("atoms")) throw ConfigError("discrete measure needs \"atoms\"");
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2)
        throw ConfigError("atoms must be [position, weight] pairs");
      cfg.atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
  } else if (cfg.measure_kind == "density") {
    cfg.family = get_or<std::string>(j, "family", "");
    cfg.log_poly = get_or<std::vector<double>>(j, "log_poly", {});
    if (cfg.family.empty() && cfg.log_poly.empty())
      throw ConfigError("density measure needs \"family\" or \"log_poly\"");
    // family defaults, overridable by "support"
    if (cfg.family == "exp_quartic") {
      cfg.support_lo = -4.0;
      cfg.support_hi = 4.0;
    } else if (cfg.family == "inv_sextic") {
      cfg.support_lo = -5.0;
      cfg.support_hi = 5.0;
    } else if (cfg.family == "uniform") {
      cfg.support_lo = -1.0;
      cfg.support_hi = 1.0;
    } else if (!cfg.family.empty()) {
      throw ConfigError("unknown density family \"" + cfg.family + "\"");
    }
    if (j.contains("support")) {
      const auto& s = j.at("support");
      if (!s.is_array() || s.size() != 2) throw ConfigError("support must be [lo, hi]");
      cfg.support_lo = s[0].get<double>();
      cfg.support_hi = s[1].get<double>();
    } else if (cfg.family.empty()) {
      throw ConfigError("log_poly density needs explicit \"support\"");
    }
    cfg.nodes = get_or<int>(j, "nodes", cfg.nodes);
  } else {
    throw ConfigError("measure kind must be \"discrete\" or \"density\"");
  }
}

} // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(j,
               {"measure", "interaction", "scan", "n_list", "sweeps", "burn_in",
                "thin", "chains", "seed", "output_dir", "grid", "rescaled_n_list",
                "rescaled_points", "check", "tolerances", "fd", "exact_n",
                "density3", "histogram"},
               "config");
  RunConfig cfg;
  if (!j.contains("measure")) throw ConfigError("config needs a \"measure\" block");
  parse_measure(j.at("measure"), cfg);

  const std::string inter = get_or<std::string>(j, "interaction", "candidate");
  if (inter == "candidate") {
    cfg.interaction = InteractionKind::candidate;
  } else if (inter == "natural") {
    cfg.interaction = InteractionKind::natural;
  } else {
    throw ConfigError("interaction must be \"candidate\" or \"natural\"");
  }

  const std::string scan = get_or<std::string>(j, "scan", "systematic");
  if (scan == "systematic") {
    cfg.scan = ScanOrder::systematic;
  } else if (scan == "random") {
    cfg.scan = ScanOrder::random;
  } else {
    throw ConfigError("scan must be \"systematic\" or \"random\"");
  }

  cfg.n_list = get_or<std::vector<double>>(j, "n_list", cfg.n_list);
  cfg.sweeps = get_or<long>(j, "sweeps", cfg.sweeps);
  cfg.burn_in = get_or<long>(j, "burn_in", cfg.burn_in);
  cfg.thin = get_or<long>(j, "thin", cfg.thin);
  cfg.chains = get_or<int>(j, "chains", cfg.chains);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require_keys(g, {"lo", "hi", "npts", "n"}, "grid");
    const auto lo = get_or<std::vector<double>>(g, "lo", {});
    const auto hi = get_or<std::vector<double>>(g, "hi", {});
    const auto np = get_or<std::vector<int>>(g, "npts", {});
    if (lo.size() != 3 || hi.size() != 3 || np.size() != 3)
      throw ConfigError("grid lo/hi/npts must have 3 entries");
    for (int k = 0; k < 3; ++k) {
      cfg.grid.lo[k] = lo[k];
      cfg.grid.hi[k] = hi[k];
      cfg.grid.npts[k] = np[k];
    }
    cfg.grid_n = get_or<double>(g, "n", cfg.grid_n);
  }
  cfg.rescaled_n_list = get_or<std::vector<double>>(j, "rescaled_n_list", cfg.rescaled_n_list);
  if (j.contains("rescaled_points")) {
    cfg.rescaled_points.clear();
    for (const auto& p : j.at("rescaled_points")) {
      if (!p.is_array() || p.size() != 3)
        throw ConfigError("rescaled_points entries must be [x, y, z]");
      cfg.rescaled_points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
  }
  if (j.contains("check")) {
    const auto& c = j.at("check");
    require_keys(c, {"w0", "points", "n_scaling", "n_max", "vanish_n"}, "check");
    cfg.check_w0 = get_or<double>(c, "w0", cfg.check_w0);
    cfg.check_points = get_or<int>(c, "points", cfg.check_points);
    cfg.check_n_scaling = get_or<std::vector<double>>(c, "n_scaling", cfg.check_n_scaling);
    cfg.check_n_max = get_or<int>(c, "n_max", cfg.check_n_max);
    cfg.check_vanish_n = get_or<double>(c, "vanish_n", cfg.check_vanish_n);
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    require_keys(t,
                 {"order2", "order34", "order6", "noise_floor", "ks", "lln_s",
                  "lln_t", "lln_u", "rescaled_ratio", "vanish_ratio",
                  "scaling_identity"},
                 "tolerances");
    cfg.expansion_tol.order2 = get_or<double>(t, "order2", cfg.expansion_tol.order2);
    cfg.expansion_tol.order34 = get_or<double>(t, "order34", cfg.expansion_tol.order34);
    cfg.expansion_tol.order6 = get_or<double>(t, "order6", cfg.expansion_tol.order6);
    cfg.expansion_tol.noise_floor =
        get_or<double>(t, "noise_floor", cfg.expansion_tol.noise_floor);
    cfg.ks_threshold = get_or<double>(t, "ks", cfg.ks_threshold);
    cfg.lln_s_const = get_or<double>(t, "lln_s", cfg.lln_s_const);
    cfg.lln_t_const = get_or<double>(t, "lln_t", cfg.lln_t_const);
    cfg.lln_u_const = get_or<double>(t, "lln_u", cfg.lln_u_const);
    cfg.rescaled_ratio_tol = get_or<double>(t, "rescaled_ratio", cfg.rescaled_ratio_tol);
    cfg.vanish_ratio_tol = get_or<double>(t, "vanish_ratio", cfg.vanish_ratio_tol);
    cfg.scaling_identity_tol =
        get_or<double>(t, "scaling_identity", cfg.scaling_identity_tol);
  }
  if (j.contains("fd")) {
    const auto& f = j.at("fd");
    require_keys(f, {"hx_rel", "hy_rel", "hz_rel", "hx6_rel"}, "fd");
    cfg.fd_plan.hx_rel = get_or<double>(f, "hx_rel", cfg.fd_plan.hx_rel);
    cfg.fd_plan.hy_rel = get_or<double>(f, "hy_rel", cfg.fd_plan.hy_rel);
    cfg.fd_plan.hz_rel = get_or<double>(f, "hz_rel", cfg.fd_plan.hz_rel);
    cfg.fd_plan.hx6_rel = get_or<double>(f, "hx6_rel", cfg.fd_plan.hx6_rel);
  }
  cfg.exact_n = get_or<int>(j, "exact_n", cfg.exact_n);
  if (j.contains("density3")) {
    const auto& d = j.at("density3");
    require_keys(d, {"p", "box_samples", "triple_samples", "cap"}, "density3");
    cfg.density3_p = get_or<double>(d, "p", cfg.density3_p);
    cfg.density3_box_samples = get_or<long>(d, "box_samples", cfg.density3_box_samples);
    cfg.density3_triple_samples =
        get_or<long>(d, "triple_samples", cfg.density3_triple_samples);
    cfg.density3_cap = get_or<double>(d, "cap", cfg.density3_cap);
  }
  if (j.contains("histogram")) {
    const auto& h = j.at("histogram");
    require_keys(h, {"bins", "lo", "hi"}, "histogram");
    cfg.histogram_bins = get_or<int>(h, "bins", cfg.histogram_bins);
    cfg.histogram_lo = get_or<double>(h, "lo", cfg.histogram_lo);
    cfg.histogram_hi = get_or<double>(h, "hi", cfg.histogram_hi);
  }

  if (cfg.sweeps <= 0 || cfg.thin <= 0 || cfg.chains <= 0 || cfg.burn_in < 0)
    throw ConfigError("counts must be positive (burn_in may be 0)");
  for (double n : cfg.n_list)
    if (!(n >= 1.0)) throw ConfigError("n_list entries must be >= 1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

Measure measure_from_config(const RunConfig& cfg) {
  if (cfg.measure_kind == "discrete") return make_discrete(cfg.atoms);
  if (cfg.family == "exp_quartic")
    return make_density([](double x) { return -x * x * x * x; }, cfg.support_lo,
                        cfg.support_hi, cfg.nodes);
  if (cfg.family == "inv_sextic")
    return make_density([](double x) { return -std::log1p(std::pow(x, 6)); },
                        cfg.support_lo, cfg.support_hi, cfg.nodes);
  if (cfg.family == "uniform")
    return make_density([](double) { return 0.0; }, cfg.support_lo, cfg.support_hi,
                        cfg.nodes);
  const std::vector<double> coeffs = cfg.log_poly;
  return make_density(
      [coeffs](double x) {
        double acc = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
        return acc;
      },
      cfg.support_lo, cfg.support_hi, cfg.nodes);
}

std::string measure_spec_string(const RunConfig& cfg) {
  std::ostringstream os;
  if (cfg.measure_kind == "discrete") {
    os << "discrete:";
    for (const auto& [p, w] : cfg.atoms) os << "(" << p << "," << w << ")";
  } else {
    os << "density:" << (cfg.family.empty() ? "log_poly" : cfg.family) << "["
       << cfg.support_lo << "," << cfg.support_hi << "]x" << cfg.nodes;
  }
  return os.str();
}

} // namespace cws
