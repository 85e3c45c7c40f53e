#ifndef CWS_SAMPLER_HPP
#define CWS_SAMPLER_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "cws/interaction.hpp"
#include "cws/measure.hpp"
#include "cws/rng.hpp"

namespace cws {

/// Which self-interaction tilts the product law. `candidate` is the model's
/// H (with the x^10 guard in the denominator); `natural` is the plain
/// F + R = x^2/(2y) + z x^4/(12 y^4) used for comparison runs.
/// The natural kind carries no convergence claims.
enum class InteractionKind { candidate, natural };

/// Interaction evaluated at raw sums (S, T, U).
inline double interaction_value(InteractionKind kind, double s, double t, double u) {
  if (kind == InteractionKind::candidate) return H(s, t, u);
  const TriplePoint p{s, t, u};
  return F(s, t) + R(p);
}

struct SummaryTriple {
  double s = 0.0; // sum x_i
  double t = 0.0; // sum x_i^2
  double u = 0.0; // sum x_i^4
};

/// One MCMC configuration with cached sums. Confined to a single execution
/// context; never shared across threads.
struct ChainState {
  int n = 0;
  std::vector<double> config;
  SummaryTriple sums;
  Xoshiro256pp rng;
  long sweep_index = 0;

  void refresh_sums();
};

struct SampleRecord {
  int chain_id = 0;
  long sweep = 0;
  double s = 0.0;
  double t = 0.0;
  double u = 0.0;
};

struct RunStats {
  long proposed = 0;
  long accepted = 0;
  double acceptance_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  }
};

/// Site-visit order within a sweep. Systematic scan (1..n) is the default
/// and keeps runs reproducible across refactorings; random scan draws n
/// sites with replacement per sweep.
enum class ScanOrder { systematic, random };

/// i.i.d. initial configuration from rho; redrawn wholesale in the atomic
/// event that every coordinate lands on 0 (bounded at 100 attempts).
ChainState init_chain(const Measure& m, int n, std::uint64_t seed);

/// One systematic-scan Metropolis-within-Gibbs sweep: each site proposes an
/// independent redraw from rho, accepted with min(1, exp(dH)); the
/// base-measure ratio cancels because the proposal is rho itself. Proposals
/// with t' <= 0 are rejected outright (the 1{T>0} indicator). Cached sums
/// are recomputed from the configuration every 256 sweeps.
long gibbs_sweep(ChainState& chain, const Measure& m,
                 InteractionKind kind = InteractionKind::candidate,
                 ScanOrder scan = ScanOrder::systematic);

struct RunResult {
  std::vector<SampleRecord> records;
  RunStats stats;
};

/// Executes `sweeps` sweeps, recording (s, t, u) every `thin` sweeps once
/// past `burn_in`.
RunResult run(ChainState& chain, const Measure& m, long sweeps, long burn_in,
              long thin, InteractionKind kind = InteractionKind::candidate,
              int chain_id = 0, ScanOrder scan = ScanOrder::systematic);

struct RunPlan {
  long sweeps = 0;
  long burn_in = 0;
  long thin = 1;
};

/// Independent chains with seeds base_seed + chain_id, merged in
/// (chain_id, sweep) order; the merge is identical regardless of execution
/// interleaving.
RunResult run_parallel(const Measure& m, int n, int chains, const RunPlan& plan,
                       std::uint64_t base_seed,
                       InteractionKind kind = InteractionKind::candidate,
                       ScanOrder scan = ScanOrder::systematic);

/// Exact joint law of (S_n, T_n, U_n) for a small discrete system, by
/// enumeration over atom multisets with multinomial weights (H depends on
/// the configuration only through the sums).
struct ExactEntry {
  double s = 0.0, t = 0.0, u = 0.0;
  double prob = 0.0;
};

struct ExactLaw {
  std::vector<ExactEntry> entries; // sorted by (s, t, u)
  double z = 0.0;                  // Z_{H,n}
  int n = 0;

  /// Marginal distribution of S.
  std::map<double, double> s_marginal() const;
};

ExactLaw enumerate_exact(const Measure& m, int n,
                         InteractionKind kind = InteractionKind::candidate);

/// Total-variation distance between the empirical S-marginal of `records`
/// and the exact law (records matched to the nearest enumerated S value).
double tv_distance_s(const std::vector<SampleRecord>& records, const ExactLaw& law);

} // namespace cws

#endif
