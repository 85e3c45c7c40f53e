#include "cws/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "cws/errors.hpp"
#include "cws/parallel.hpp"

namespace cws {

namespace {
constexpr int kRefreshPeriod = 256;
constexpr int kInitAttempts = 100;
} // namespace

void ChainState::refresh_sums() {
  SummaryTriple fresh;
  for (double x : config) {
    const double x2 = x * x;
    fresh.s += x;
    fresh.t += x2;
    fresh.u += x2 * x2;
  }
  sums = fresh;
}

ChainState init_chain(const Measure& m, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("chain size must be >= 1");
  ChainState chain;
  chain.n = n;
  chain.rng.reseed(seed);
  chain.config.resize(n);
  for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
    for (double& x : chain.config) x = m.draw_one(chain.rng);
    chain.refresh_sums();
    if (chain.sums.t > 0.0) return chain;
  }
  throw InitFailure("could not draw a configuration with sum of squares > 0");
}

long gibbs_sweep(ChainState& chain, const Measure& m, InteractionKind kind,
                 ScanOrder scan) {
  long accepted = 0;
  double s = chain.sums.s, t = chain.sums.t, u = chain.sums.u;
  double h_cur = interaction_value(kind, s, t, u);
  for (int step = 0; step < chain.n; ++step) {
    const int i = scan == ScanOrder::systematic
                      ? step
                      : std::min(static_cast<int>(chain.rng.uniform01() * chain.n),
                                 chain.n - 1);
    const double xi = chain.config[i];
    const double xi2 = xi * xi;
    const double prop = m.draw_one(chain.rng);
    const double prop2 = prop * prop;
    const double s1 = s + (prop - xi);
    const double t1 = t + (prop2 - xi2);
    const double u1 = u + (prop2 * prop2 - xi2 * xi2);
    if (t1 <= 0.0) continue; // the 1{T > 0} indicator
    const double h_prop = interaction_value(kind, s1, t1, u1);
    const double dh = h_prop - h_cur;
    if (dh >= 0.0 || chain.rng.uniform01() < std::exp(dh)) {
      chain.config[i] = prop;
      s = s1;
      t = t1;
      u = u1;
      h_cur = h_prop;
      ++accepted;
    }
  }
  chain.sums = {s, t, u};
  ++chain.sweep_index;
  if (chain.sweep_index % kRefreshPeriod == 0) chain.refresh_sums();
  return accepted;
}

RunResult run(ChainState& chain, const Measure& m, long sweeps, long burn_in,
              long thin, InteractionKind kind, int chain_id, ScanOrder scan) {
  if (!(sweeps > burn_in && burn_in >= 0)) throw ConfigError("need sweeps > burn_in >= 0");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  RunResult res;
  res.records.reserve(static_cast<std::size_t>((sweeps - burn_in) / thin) + 1);
  for (long sweep = 1; sweep <= sweeps; ++sweep) {
    res.stats.accepted += gibbs_sweep(chain, m, kind, scan);
    res.stats.proposed += chain.n;
    if (sweep > burn_in && (sweep - burn_in) % thin == 0) {
      res.records.push_back(
          {chain_id, sweep, chain.sums.s, chain.sums.t, chain.sums.u});
    }
  }
  return res;
}

RunResult run_parallel(const Measure& m, int n, int chains, const RunPlan& plan,
                       std::uint64_t base_seed, InteractionKind kind,
                       ScanOrder scan) {
  if (chains < 1) throw ConfigError("need at least one chain");
  std::vector<RunResult> partial(chains);
  parallel_for(static_cast<std::size_t>(chains), [&](std::size_t c) {
    ChainState chain = init_chain(m, n, base_seed + static_cast<std::uint64_t>(c));
    partial[c] = run(chain, m, plan.sweeps, plan.burn_in, plan.thin, kind,
                     static_cast<int>(c), scan);
  });
  RunResult merged;
  std::size_t total = 0;
  for (const auto& p : partial) total += p.records.size();
  merged.records.reserve(total);
  for (auto& p : partial) {
    merged.records.insert(merged.records.end(), p.records.begin(), p.records.end());
    merged.stats.proposed += p.stats.proposed;
    merged.stats.accepted += p.stats.accepted;
  }
  return merged;
}

namespace {

// Multiset enumeration: counts[k] copies of atom k, sum n over k atoms.
void enumerate_multisets(int atom, int remaining, std::vector<int>& counts,
                         const std::function<void(const std::vector<int>&)>& emit) {
  const int k = static_cast<int>(counts.size());
  if (atom == k - 1) {
    counts[atom] = remaining;
    emit(counts);
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    counts[atom] = c;
    enumerate_multisets(atom + 1, remaining - c, counts, emit);
  }
}

double binom(double n, double k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

} // namespace

ExactLaw enumerate_exact(const Measure& m, int n, InteractionKind kind) {
  if (m.kind() != MeasureKind::discrete_atoms)
    throw ConfigError("exact enumeration needs a discrete measure");
  if (n < 1 || n > 8) throw TooLarge("exact enumeration supports 1 <= n <= 8");
  const auto& pos = m.positions();
  const auto& mass = m.masses();
  const int k = static_cast<int>(pos.size());
  if (binom(n + k - 1.0, k - 1.0) > 1e7) throw TooLarge("too many multisets");

  // factorials up to 8
  double fact[9] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};

  struct Key {
    double s, t, u;
    bool operator<(const Key& o) const {
      if (s != o.s) return s < o.s;
      if (t != o.t) return t < o.t;
      return u < o.u;
    }
  };
  std::map<Key, double> weights; // multinomial mass times exp(H), by (S,T,U)
  double z = 0.0;

  std::vector<int> counts(k, 0);
  enumerate_multisets(0, n, counts, [&](const std::vector<int>& cs) {
    double s = 0.0, t = 0.0, u = 0.0;
    double multinom = fact[n];
    double prob = 1.0;
    for (int a = 0; a < k; ++a) {
      if (cs[a] == 0) continue;
      const double p = pos[a];
      const double p2 = p * p;
      s += cs[a] * p;
      t += cs[a] * p2;
      u += cs[a] * p2 * p2;
      multinom /= fact[cs[a]];
      prob *= std::pow(mass[a], cs[a]);
    }
    if (!(t > 0.0)) return; // indicator kills T = 0
    const double w = multinom * prob * std::exp(interaction_value(kind, s, t, u));
    z += w;
    weights[Key{s, t, u}] += w;
  });

  if (!(z > 0.0)) throw ZeroMass("exact law has zero mass");
  ExactLaw law;
  law.n = n;
  law.z = z;
  law.entries.reserve(weights.size());
  for (const auto& [key, w] : weights)
    law.entries.push_back({key.s, key.t, key.u, w / z});
  return law;
}

std::map<double, double> ExactLaw::s_marginal() const {
  std::map<double, double> marg;
  for (const auto& e : entries) {
    // merge keys equal up to 1e-12 scale
    auto it = marg.lower_bound(e.s - 1e-12 * (1.0 + std::abs(e.s)));
    if (it != marg.end() &&
        std::abs(it->first - e.s) <= 1e-12 * (1.0 + std::abs(e.s))) {
      it->second += e.prob;
    } else {
      marg[e.s] += e.prob;
    }
  }
  return marg;
}

double tv_distance_s(const std::vector<SampleRecord>& records, const ExactLaw& law) {
  const auto marg = law.s_marginal();
  std::vector<double> support;
  std::vector<double> probs;
  support.reserve(marg.size());
  probs.reserve(marg.size());
  for (const auto& [s, p] : marg) {
    support.push_back(s);
    probs.push_back(p);
  }
  std::vector<double> counts(support.size(), 0.0);
  double outliers = 0.0;
  for (const auto& rec : records) {
    auto it = std::lower_bound(support.begin(), support.end(), rec.s);
    std::size_t idx;
    if (it == support.begin()) {
      idx = 0;
    } else if (it == support.end()) {
      idx = support.size() - 1;
    } else {
      const std::size_t hi = it - support.begin();
      idx = (std::abs(support[hi] - rec.s) < std::abs(rec.s - support[hi - 1]))
                ? hi
                : hi - 1;
    }
    if (std::abs(support[idx] - rec.s) <= 1e-6 * (1.0 + std::abs(rec.s))) {
      counts[idx] += 1.0;
    } else {
      outliers += 1.0; // drifted or impossible value; counts against TV
    }
  }
  const double total = static_cast<double>(records.size());
  double tv = outliers / total;
  for (std::size_t i = 0; i < support.size(); ++i)
    tv += std::abs(counts[i] / total - probs[i]);
  return 0.5 * tv;
}

} // namespace cws
