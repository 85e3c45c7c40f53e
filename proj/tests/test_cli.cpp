#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cws/config.hpp"
#include "cws/errors.hpp"

namespace fs = std::filesystem;
using namespace cws;

namespace {

const fs::path kWork = fs::temp_directory_path() / "cws_cli_tests";

void write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  os << content;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(CWSEXTIC_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

long count_lines(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  long n = 0;
  while (std::getline(is, line)) ++n;
  return n;
}

} // namespace

TEST_CASE("config parsing") {
  SUBCASE("round trip of a full config") {
    const std::string text = R"({
      "measure": {"kind": "density", "family": "exp_quartic", "nodes": 512},
      "interaction": "natural",
      "n_list": [250, 500],
      "sweeps": 2000, "burn_in": 100, "thin": 2, "chains": 3, "seed": 99,
      "output_dir": "/tmp/x",
      "tolerances": {"ks": 0.04}
    })";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.family == "exp_quartic");
    CHECK(cfg.support_lo == -4.0);
    CHECK(cfg.interaction == InteractionKind::natural);
    CHECK(cfg.n_list.size() == 2);
    CHECK(cfg.chains == 3);
    CHECK(cfg.ks_threshold == 0.04);
    const Measure m = measure_from_config(cfg);
    CHECK(m.kind() == MeasureKind::density_on_interval);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"measure": {"kind": "discrete", "atoms": [[1, 0.5], [-1, 0.5]]}, "typo_key": 1})"),
                    ConfigError);
  }
  SUBCASE("bad JSON is a config error") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  }
  SUBCASE("counts must be positive") {
    CHECK_THROWS_AS(parse_config(R"({"measure": {"kind": "discrete", "atoms": [[1, 0.5], [-1, 0.5]]}, "sweeps": -5})"),
                    ConfigError);
  }
  SUBCASE("inline log-polynomial density") {
    const RunConfig cfg = parse_config(
        R"({"measure": {"kind": "density", "log_poly": [0, 0, 0, 0, -1], "support": [-4, 4], "nodes": 256}})");
    const Measure m = measure_from_config(cfg);
    CHECK(m.symmetric());
    CHECK(moments(m).mu4 == doctest::Approx(0.25).epsilon(1e-8));
  }
}

TEST_CASE("check command: exit codes and failing clauses") {
  fs::create_directories(kWork);
  SUBCASE("exp_quartic passes every clause") {
    write(kWork / "ok.json",
          R"({"measure": {"kind": "density", "family": "exp_quartic", "nodes": 512}})");
    const int rc = run_cli("-c " + (kWork / "ok.json").string() + " check",
                           kWork / "ok.log");
    CHECK(rc == 0);
    const std::string log = slurp(kWork / "ok.log");
    CHECK(log.find("criterion") != std::string::npos);
    CHECK(log.find("FAIL") == std::string::npos);
  }
  SUBCASE("inv_sextic fails the criterion clause") {
    write(kWork / "bad.json",
          R"({"measure": {"kind": "density", "family": "inv_sextic", "nodes": 1024}})");
    const int rc = run_cli("-c " + (kWork / "bad.json").string() + " check",
                           kWork / "bad.log");
    CHECK(rc == 1);
    const std::string log = slurp(kWork / "bad.log");
    CHECK(log.find("FAIL  criterion") != std::string::npos);
    CHECK(log.find("-0.48") != std::string::npos);
  }
  SUBCASE("three-point measure fails the support clause") {
    write(kWork / "tri.json",
          R"({"measure": {"kind": "discrete", "atoms": [[-1, 0.25], [0, 0.5], [1, 0.25]]}})");
    const int rc = run_cli("-c " + (kWork / "tri.json").string() + " check",
                           kWork / "tri.log");
    CHECK(rc == 1);
    CHECK(slurp(kWork / "tri.log").find("FAIL  support>=5") != std::string::npos);
  }
  SUBCASE("missing config file is a config error") {
    const int rc = run_cli("-c " + (kWork / "nope.json").string() + " check",
                           kWork / "nope.log");
    CHECK(rc == 2);
  }
}

TEST_CASE("sample command: files, row counts, reproducibility") {
  const fs::path dir = kWork / "sample_run";
  fs::remove_all(dir);
  write(kWork / "samp.json", R"({
    "measure": {"kind": "discrete",
                "atoms": [[-2, 0.2], [-1, 0.2], [0, 0.2], [1, 0.2], [2, 0.2]]},
    "n_list": [6], "sweeps": 400, "burn_in": 100, "thin": 3, "chains": 2,
    "seed": 31415, "output_dir": ")" + dir.string() + R"("
  })");
  const int rc = run_cli("-c " + (kWork / "samp.json").string() + " sample",
                         kWork / "samp.log");
  CHECK(rc == 0);
  REQUIRE(fs::exists(dir / "sample_n6.csv"));
  REQUIRE(fs::exists(dir / "sample_n6.meta.json"));
  // rows = chains * (sweeps - burn_in) / thin, plus the header line
  CHECK(count_lines(dir / "sample_n6.csv") == 2 * (400 - 100) / 3 + 1);

  const std::string first = slurp(dir / "sample_n6.csv");
  const int rc2 = run_cli("-c " + (kWork / "samp.json").string() + " sample",
                          kWork / "samp2.log");
  CHECK(rc2 == 0);
  CHECK(slurp(dir / "sample_n6.csv") == first); // byte-identical rerun
}

TEST_CASE("analyze command consumes samples and rejects mismatches") {
  const fs::path dir = kWork / "analyze_run";
  fs::remove_all(dir);
  // small but analyzable natural-interaction run
  write(kWork / "ana.json", R"({
    "measure": {"kind": "density", "family": "exp_quartic", "nodes": 512},
    "interaction": "natural",
    "n_list": [50], "sweeps": 3000, "burn_in": 500, "thin": 1, "chains": 2,
    "seed": 7, "output_dir": ")" + dir.string() + R"(",
    "tolerances": {"ks": 0.9, "lln_s": 9.0, "lln_t": 9.0, "lln_u": 9.0}
  })");
  REQUIRE(run_cli("-c " + (kWork / "ana.json").string() + " sample",
                  kWork / "ana_s.log") == 0);
  const int rc = run_cli("-c " + (kWork / "ana.json").string() + " analyze",
                         kWork / "ana_a.log");
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "report_n50.json"));
  CHECK(fs::exists(dir / "hist_n50.csv"));
  CHECK(fs::exists(dir / "overlay_n50.svg"));

  SUBCASE("empty sample file is a schema mismatch") {
    write(dir / "sample_n50.csv", "chain_id,sweep,s,t,u\n");
    const int rc2 = run_cli("-c " + (kWork / "ana.json").string() + " analyze",
                            kWork / "ana_e.log");
    CHECK(rc2 == 2);
    CHECK(slurp(kWork / "ana_e.log").find("schema mismatch") != std::string::npos);
  }
}

TEST_CASE("force-sampled inadmissible measure fails analyze with exit 1") {
  const fs::path dir = kWork / "force_run";
  fs::remove_all(dir);
  write(kWork / "force.json", R"({
    "measure": {"kind": "density", "family": "inv_sextic", "nodes": 1024},
    "n_list": [20], "sweeps": 1500, "burn_in": 200, "thin": 1, "chains": 2,
    "seed": 3, "output_dir": ")" + dir.string() + R"("
  })");
  // without --force the sampler refuses the measure
  CHECK(run_cli("-c " + (kWork / "force.json").string() + " sample",
                kWork / "force_refused.log") == 1);
  CHECK(run_cli("-c " + (kWork / "force.json").string() + " sample --force",
                kWork / "force_ok.log") == 0);
  REQUIRE(fs::exists(dir / "sample_n20.csv"));
  // the rescaling guard rejects the analysis: hypothesis failure, exit 1
  const int rc = run_cli("-c " + (kWork / "force.json").string() + " analyze",
                         kWork / "force_an.log");
  CHECK(rc == 1);
  CHECK(slurp(kWork / "force_an.log").find("inadmissible") != std::string::npos);
}

TEST_CASE("exact command reproduces the hand-computed two-atom law") {
  const fs::path dir = kWork / "exact_run";
  fs::remove_all(dir);
  write(kWork / "ex.json", R"({
    "measure": {"kind": "discrete", "atoms": [[-1, 0.5], [1, 0.5]]},
    "exact_n": 2, "output_dir": ")" + dir.string() + R"("
  })");
  const int rc = run_cli("-c " + (kWork / "ex.json").string() + " exact",
                         kWork / "ex.log");
  CHECK(rc == 0);
  const std::string csv = slurp(dir / "exact_law.csv");
  // P(S = 0) = 1 / (1 + e^{25/24}) = 0.2608285...
  CHECK(csv.find("0.26082853749") != std::string::npos);
  const std::string meta = slurp(dir / "exact_law.meta.json");
  CHECK(meta.find("\"z_in_bounds\": true") != std::string::npos);
}

TEST_CASE("cramer command: degenerate measure exits 3, tight tolerance exits 1") {
  const fs::path dir = kWork / "cramer_run";
  SUBCASE("three-point measure is degenerate") {
    write(kWork / "cr3.json", R"({
      "measure": {"kind": "discrete", "atoms": [[-1, 0.25], [0, 0.5], [1, 0.25]]},
      "output_dir": ")" + (dir / "deg").string() + R"("
    })");
    const int rc = run_cli("-c " + (kWork / "cr3.json").string() + " cramer",
                           kWork / "cr3.log");
    CHECK(rc == 3);
  }
  SUBCASE("absurdly tight order-6 tolerance demonstrates threshold semantics") {
    write(kWork / "cr5.json", R"({
      "measure": {"kind": "discrete",
                  "atoms": [[-2, 0.2], [-1, 0.2], [0, 0.2], [1, 0.2], [2, 0.2]]},
      "grid": {"lo": [-0.2, 1.8, 6.4], "hi": [0.2, 2.2, 7.2], "npts": [5, 5, 5], "n": 1000},
      "rescaled_n_list": [1000],
      "rescaled_points": [[1, 0, 0]],
      "tolerances": {"order6": 1e-6, "rescaled_ratio": 0.5},
      "output_dir": ")" + (dir / "tight").string() + R"("
    })");
    const int rc = run_cli("-c " + (kWork / "cr5.json").string() + " cramer",
                           kWork / "cr5.log");
    CHECK(rc == 1);
    CHECK(slurp(kWork / "cr5.log").find("FAIL  d6/dx6") != std::string::npos);
    CHECK(fs::exists(dir / "tight" / "expansion_report.json"));
    CHECK(fs::exists(dir / "tight" / "landscape.csv"));
  }
}

TEST_CASE("density3 command writes the round trip and integral") {
  const fs::path dir = kWork / "d3_run";
  fs::remove_all(dir);
  write(kWork / "d3.json", R"({
    "measure": {"kind": "density", "family": "uniform", "nodes": 512},
    "density3": {"p": 1.1, "box_samples": 400000, "triple_samples": 100000, "cap": 8.0},
    "seed": 5, "output_dir": ")" + dir.string() + R"("
  })");
  const int rc = run_cli("-c " + (kWork / "d3.json").string() + " density3",
                         kWork / "d3.log");
  CHECK(rc == 0);
  std::ifstream is(dir / "density3.json");
  nlohmann::json rep;
  is >> rep;
  CHECK(std::abs(rep["round_trip"]["jacobian"].get<double>() - 96.0) <= 1e-9);
  CHECK(std::abs(rep["round_trip"]["x"].get<double>() - 1.0) <= 1e-10);
  CHECK(std::abs(rep["round_trip"]["y"].get<double>() - 2.0) <= 1e-10);
  CHECK(std::abs(rep["round_trip"]["z"].get<double>() - 3.0) <= 1e-10);
  CHECK(rep["condition_star"]["verdict"] == "finite");
}
