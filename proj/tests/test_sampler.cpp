#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "cws/errors.hpp"
#include "cws/sampler.hpp"
#include "oracles.hpp"

using namespace cws;

TEST_CASE("init_chain: determinism, sums, LLN under the product law") {
  const Measure five = oracles::five_point_uniform();
  const ChainState a = init_chain(five, 1, 7);
  const ChainState b = init_chain(five, 1, 7);
  CHECK(a.config[0] == b.config[0]);

  const Measure m = oracles::exp_quartic();
  const MomentSet ms = moments(m);
  const ChainState big = init_chain(m, 10000, 42);
  CHECK(big.sums.t == doctest::Approx(10000.0 * ms.sigma2).epsilon(0.05));

  ChainState copy = big;
  copy.refresh_sums();
  CHECK(copy.sums.s == doctest::Approx(big.sums.s).epsilon(1e-12));
  CHECK(copy.sums.t == doctest::Approx(big.sums.t).epsilon(1e-12));
  CHECK(copy.sums.u == doctest::Approx(big.sums.u).epsilon(1e-12));
}

TEST_CASE("one-site chain reaches the exact single-site law") {
  // stationary law on atoms x: P(x) propto w(x) exp(H(x, x^2, x^4)) 1{x != 0}
  const Measure five = oracles::five_point_uniform();
  std::map<double, double> expected;
  double z = 0.0;
  for (std::size_t i = 0; i < five.positions().size(); ++i) {
    const double x = five.positions()[i];
    if (x == 0.0) continue;
    const double w = five.masses()[i] * std::exp(H(x, x * x, x * x * x * x));
    expected[x] = w;
    z += w;
  }
  for (auto& [x, w] : expected) w /= z;
  CHECK(expected.at(1.0) == doctest::Approx(expected.at(-1.0)).epsilon(1e-12));

  ChainState chain = init_chain(five, 1, 99);
  std::map<double, long> counts;
  const long sweeps = 400000;
  for (long i = 0; i < sweeps; ++i) {
    gibbs_sweep(chain, five);
    counts[chain.config[0]] += 1;
  }
  CHECK(counts.count(0.0) == 0); // never visits the zero configuration
  double tv = 0.0;
  for (const auto& [x, p] : expected)
    tv += std::abs(static_cast<double>(counts[x]) / sweeps - p);
  CHECK(0.5 * tv < 0.01);
}

TEST_CASE("two-site two-atom chain matches the 4-configuration law") {
  const Measure pm = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  const double h2 = 25.0 / 24.0; // H(+-2, 2, 2)
  const double p_pm2 = std::exp(h2) / (2.0 + 2.0 * std::exp(h2));
  const double p_0 = 1.0 / (1.0 + std::exp(h2));

  ChainState chain = init_chain(pm, 2, 123);
  std::map<int, long> counts;
  const long sweeps = 400000;
  for (long i = 0; i < sweeps; ++i) {
    gibbs_sweep(chain, pm);
    counts[static_cast<int>(std::lround(chain.sums.s))] += 1;
  }
  CHECK(static_cast<double>(counts[2]) / sweeps == doctest::Approx(p_pm2).epsilon(0.03));
  CHECK(static_cast<double>(counts[-2]) / sweeps == doctest::Approx(p_pm2).epsilon(0.03));
  CHECK(static_cast<double>(counts[0]) / sweeps == doctest::Approx(p_0).epsilon(0.03));
}

TEST_CASE("random scan preserves the stationary law and determinism") {
  const Measure pm = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  const double h2 = 25.0 / 24.0;
  const double p_pm2 = std::exp(h2) / (2.0 + 2.0 * std::exp(h2));
  ChainState chain = init_chain(pm, 2, 888);
  std::map<int, long> counts;
  const long sweeps = 400000;
  for (long i = 0; i < sweeps; ++i) {
    gibbs_sweep(chain, pm, InteractionKind::candidate, ScanOrder::random);
    counts[static_cast<int>(std::lround(chain.sums.s))] += 1;
  }
  CHECK(static_cast<double>(counts[2]) / sweeps == doctest::Approx(p_pm2).epsilon(0.03));
  CHECK(static_cast<double>(counts[-2]) / sweeps == doctest::Approx(p_pm2).epsilon(0.03));

  ChainState c1 = init_chain(pm, 8, 5), c2 = init_chain(pm, 8, 5);
  const RunResult r1 = run(c1, pm, 200, 0, 1, InteractionKind::candidate, 0,
                           ScanOrder::random);
  const RunResult r2 = run(c2, pm, 200, 0, 1, InteractionKind::candidate, 0,
                           ScanOrder::random);
  for (std::size_t i = 0; i < r1.records.size(); ++i)
    CHECK(r1.records[i].s == r2.records[i].s);
}

TEST_CASE("run: record counting and determinism") {
  const Measure five = oracles::five_point_uniform();
  ChainState c1 = init_chain(five, 4, 5);
  const RunResult r1 = run(c1, five, 1000, 0, 1);
  CHECK(r1.records.size() == 1000);

  ChainState c2 = init_chain(five, 4, 5);
  const RunResult r2 = run(c2, five, 1000, 0, 1);
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].s == r2.records[i].s);
    CHECK(r1.records[i].sweep == r2.records[i].sweep);
  }

  ChainState c3 = init_chain(five, 4, 5);
  const RunResult r3 = run(c3, five, 1000, 100, 7);
  CHECK(r3.records.size() == (1000 - 100) / 7);
}

TEST_CASE("run_parallel merges deterministically") {
  const Measure five = oracles::five_point_uniform();
  RunPlan plan{500, 50, 2};

  const RunResult par = run_parallel(five, 8, 4, plan, 77);
  // serial reference with the same per-chain seeds
  std::vector<SampleRecord> serial;
  RunStats stats;
  for (int c = 0; c < 4; ++c) {
    ChainState chain = init_chain(five, 8, 77 + c);
    const RunResult r = run(chain, five, plan.sweeps, plan.burn_in, plan.thin,
                            InteractionKind::candidate, c);
    serial.insert(serial.end(), r.records.begin(), r.records.end());
    stats.proposed += r.stats.proposed;
    stats.accepted += r.stats.accepted;
  }
  REQUIRE(par.records.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(par.records[i].chain_id == serial[i].chain_id);
    CHECK(par.records[i].sweep == serial[i].sweep);
    CHECK(par.records[i].s == serial[i].s);
    CHECK(par.records[i].t == serial[i].t);
    CHECK(par.records[i].u == serial[i].u);
  }
  CHECK(par.stats.accepted == stats.accepted);

  const RunResult single = run_parallel(five, 8, 1, plan, 77);
  ChainState chain = init_chain(five, 8, 77);
  const RunResult direct = run(chain, five, plan.sweeps, plan.burn_in, plan.thin);
  REQUIRE(single.records.size() == direct.records.size());
  for (std::size_t i = 0; i < direct.records.size(); ++i)
    CHECK(single.records[i].s == direct.records[i].s);
}

TEST_CASE("pooled chains agree with one long chain (two-sample KS)") {
  // small system with aggressive thinning so records are near-independent
  const Measure five = oracles::five_point_uniform();
  RunPlan plan{20000, 1000, 64};
  const RunResult pooled = run_parallel(five, 64, 8, plan, 2025);
  ChainState chain = init_chain(five, 64, 9090);
  const RunResult longrun = run(chain, five, 8 * 20000, 1000, 64);

  std::vector<double> xs, ys;
  for (const auto& r : pooled.records) xs.push_back(r.s);
  for (const auto& r : longrun.records) ys.push_back(r.s);
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double d = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (j < ys.size() && ys[j] <= xs[i]) ++j;
    d = std::max(d, std::abs(static_cast<double>(i + 1) / xs.size() -
                             static_cast<double>(j) / ys.size()));
  }
  const double nm = static_cast<double>(xs.size()) * ys.size() / (xs.size() + ys.size());
  CHECK(d <= 1.63 / std::sqrt(nm)); // p = 0.01 asymptotic threshold
}

TEST_CASE("detailed balance: incremental dH equals the fresh log-density ratio") {
  // the kernel accepts with min(1, exp(dH)) computed from incrementally
  // updated sums; detailed balance needs that dH to equal the log ratio of
  // the target densities of the two configurations (the rho factors cancel
  // because the proposal is rho itself)
  const Measure five = oracles::five_point_uniform();
  Xoshiro256pp rng(33);
  auto fresh_sums = [](const std::vector<double>& cfg) {
    SummaryTriple f;
    for (double x : cfg) {
      const double x2 = x * x;
      f.s += x;
      f.t += x2;
      f.u += x2 * x2;
    }
    return f;
  };
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 6;
    std::vector<double> cfg(n);
    for (double& x : cfg) x = five.draw_one(rng);
    const SummaryTriple before = fresh_sums(cfg);
    if (before.t == 0.0) continue;
    const int site = static_cast<int>(rng.uniform01() * n);
    const double old = cfg[site];
    const double prop = five.draw_one(rng);
    // incremental update, as the sweep performs it
    const double s1 = before.s + (prop - old);
    const double t1 = before.t + (prop * prop - old * old);
    const double u1 = before.u + (prop * prop * prop * prop - old * old * old * old);
    if (t1 <= 0.0) continue;
    const double dh_incr = interaction_value(InteractionKind::candidate, s1, t1, u1) -
                           interaction_value(InteractionKind::candidate, before.s,
                                             before.t, before.u);
    // fresh recomputation of the proposed configuration
    cfg[site] = prop;
    const SummaryTriple after = fresh_sums(cfg);
    cfg[site] = old;
    const double dh_fresh = H(after.s, after.t, after.u) - H(before.s, before.t, before.u);
    CHECK(std::abs(dh_incr - dh_fresh) <= 1e-12 * (1.0 + std::abs(dh_fresh)));
  }
}

TEST_CASE("incremental sums stay glued to fresh recomputation") {
  const Measure m = oracles::exp_quartic();
  ChainState chain = init_chain(m, 500, 11);
  run(chain, m, 10000, 0, 10000); // discard records; just advance the chain
  const SummaryTriple cached = chain.sums;
  chain.refresh_sums();
  CHECK(std::abs(cached.s - chain.sums.s) <= 1e-9 * (1.0 + std::abs(chain.sums.s)));
  CHECK(std::abs(cached.t - chain.sums.t) <= 1e-9 * chain.sums.t);
  CHECK(std::abs(cached.u - chain.sums.u) <= 1e-9 * chain.sums.u);
}

TEST_CASE("mirrored atoms with the same seed give the mirrored chain") {
  const Measure a = oracles::five_point_uniform();
  const Measure b = make_discrete({{2.0, 0.2}, {1.0, 0.2}, {0.0, 0.2}, {-1.0, 0.2}, {-2.0, 0.2}});
  ChainState ca = init_chain(a, 16, 314);
  ChainState cb = init_chain(b, 16, 314);
  for (int i = 0; i < 16; ++i) CHECK(ca.config[i] == -cb.config[i]);
  for (int sweep = 0; sweep < 200; ++sweep) {
    gibbs_sweep(ca, a);
    gibbs_sweep(cb, b);
  }
  for (int i = 0; i < 16; ++i) CHECK(ca.config[i] == -cb.config[i]);
  CHECK(ca.sums.s == -cb.sums.s);
  CHECK(ca.sums.t == cb.sums.t);
  CHECK(ca.sums.u == cb.sums.u);
}

TEST_CASE("recorded sums stay inside the scaled moment cone") {
  const Measure m = oracles::exp_quartic();
  const int n = 64;
  ChainState chain = init_chain(m, n, 21);
  const RunResult res = run(chain, m, 2000, 100, 5);
  for (const auto& r : res.records) {
    CHECK(r.s * r.s <= n * r.t * (1.0 + 1e-12));
    CHECK(r.t * r.t <= n * r.u * (1.0 + 1e-12));
  }
}

TEST_CASE("exact enumeration: single site law and Z") {
  const Measure tri = make_discrete({{-1.0, 1.0 / 3.0}, {0.0, 1.0 / 3.0}, {1.0, 1.0 / 3.0}});
  const ExactLaw law = enumerate_exact(tri, 1);
  // configuration 0 is killed by the indicator; +-1 each carry 1/2
  const auto marg = law.s_marginal();
  CHECK(marg.size() == 2);
  CHECK(marg.at(-1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(marg.at(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  const double h11 = 0.5 + 1.0 / 36.0;
  CHECK(law.z == doctest::Approx((2.0 / 3.0) * std::exp(h11)).epsilon(1e-13));
}

TEST_CASE("interaction kinds at the sums scale") {
  // candidate at (2,2,2) is 25/24; natural adds the unregularized tail:
  // F + R = 1 + 2*16/(12*16) = 7/6
  CHECK(interaction_value(InteractionKind::candidate, 2.0, 2.0, 2.0) ==
        doctest::Approx(25.0 / 24.0).epsilon(1e-15));
  CHECK(interaction_value(InteractionKind::natural, 2.0, 2.0, 2.0) ==
        doctest::Approx(7.0 / 6.0).epsilon(1e-15));
  // the two laws differ at n = 2 accordingly
  const Measure pm = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  const ExactLaw cand = enumerate_exact(pm, 2, InteractionKind::candidate);
  const ExactLaw nat = enumerate_exact(pm, 2, InteractionKind::natural);
  CHECK(nat.s_marginal().at(2.0) > cand.s_marginal().at(2.0));
  CHECK(nat.s_marginal().at(2.0) ==
        doctest::Approx(std::exp(7.0 / 6.0) / (2.0 + 2.0 * std::exp(7.0 / 6.0)))
            .epsilon(1e-13));
}

TEST_CASE("exact enumeration: two sites, two atoms") {
  const Measure pm = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  const ExactLaw law = enumerate_exact(pm, 2);
  const double h2 = 25.0 / 24.0;
  const auto marg = law.s_marginal();
  CHECK(marg.at(2.0) == doctest::Approx(std::exp(h2) / (2.0 + 2.0 * std::exp(h2))).epsilon(1e-13));
  CHECK(marg.at(-2.0) == doctest::Approx(std::exp(h2) / (2.0 + 2.0 * std::exp(h2))).epsilon(1e-13));
  CHECK(marg.at(0.0) == doctest::Approx(1.0 / (1.0 + std::exp(h2))).epsilon(1e-13));
  CHECK(law.z == doctest::Approx(0.5 * (1.0 + std::exp(h2))).epsilon(1e-13));
}

TEST_CASE("Z bounds hold for random symmetric measures and n <= 6") {
  // The lower bound 1 <= Z assumes the {T = 0} set has negligible mass; the
  // exactly provable form subtracts the excluded rho({0})^n.
  Xoshiro256pp rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const double c1 = 0.4 + rng.uniform01(), c2 = 1.2 + rng.uniform01();
    const double w1 = 0.05 + 0.1 * rng.uniform01(), w2 = 0.05 + 0.1 * rng.uniform01();
    const double w0 = 1.0 - 2.0 * w1 - 2.0 * w2;
    const Measure m = make_discrete(
        {{-c2, w2}, {-c1, w1}, {0.0, w0}, {c1, w1}, {c2, w2}});
    for (int n : {1, 2, 3, 6}) {
      const ExactLaw law = enumerate_exact(m, n);
      CHECK(law.z >= 1.0 - std::pow(w0, n) - 1e-12);
      CHECK(law.z <= std::exp(n / 2.0 + n * n / 12.0) * (1.0 + 1e-12));
      double total = 0.0;
      for (const auto& e : law.entries) total += e.prob;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // the five-point uniform satisfies the plain [1, exp(n/2 + n^2/12)] bound
  const Measure five = oracles::five_point_uniform();
  for (int n : {1, 2, 4, 6}) {
    const ExactLaw law = enumerate_exact(five, n);
    CHECK(law.z >= 1.0);
    CHECK(law.z <= std::exp(n / 2.0 + n * n / 12.0));
  }
}

TEST_CASE("enumeration guards") {
  const Measure pm = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  CHECK_THROWS_AS(enumerate_exact(pm, 9), TooLarge);
  CHECK_THROWS_AS(enumerate_exact(oracles::exp_quartic(), 2), ConfigError);
}

TEST_CASE("MCMC matches exact enumeration at n = 6 (desk-scale TV check)") {
  const Measure five = oracles::five_point_uniform();
  const ExactLaw law = enumerate_exact(five, 6);
  ChainState chain = init_chain(five, 6, 4242);
  const RunResult res = run(chain, five, 220000, 20000, 1);
  const double tv = tv_distance_s(res.records, law);
  INFO("tv = ", tv);
  CHECK(tv < 0.02);
}
