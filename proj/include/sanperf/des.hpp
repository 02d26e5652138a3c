#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sanperf/transient.hpp"

// Discrete-event Monte Carlo execution of a SanModel (pre- or post-Erlang
// expansion): the statistical oracle for the analytic results.
//
// Random source: mt19937_64 seeded through splitmix64, uniforms mapped by
// (x >> 11) * 2^-53 and exponentials by inversion ("mt19937_64/splitmix64-v1").
// Replication r of a run with seed s uses the independent substream derived
// from (s, r), so results do not depend on scheduling.

namespace sanperf {

inline constexpr const char* kRngAlgorithm = "mt19937_64/splitmix64-v1";

struct TraceEntry {
  double time;
  ActivityId activity;
  std::size_t marking_hash;
};

struct SimRun {
  std::uint64_t seed = 0;
  double horizon = 0.0;
  Marking final_marking;
  std::vector<TraceEntry> trace;  // only when tracing was requested
  bool stopped = false;           // stop_when predicate fired
  double stop_time = 0.0;
};

struct SimOptions {
  bool record_trace = false;
  // Consecutive instantaneous firings before declaring a vanishing livelock.
  std::size_t instantaneous_limit = 1'000'000;
  // Optional early stop: simulation halts the first time this holds.
  MarkingPredicate stop_when;
};

// Race semantics: every enabled timed activity samples its firing time
// (exponentials memorylessly, deterministic exactly after its delay measured
// from enabling); the earliest fires; instantaneous activities fire
// immediately by priority; the enabled set is recomputed after every firing.
SimRun simulate(const SanModel& model, double horizon, std::uint64_t seed,
                const SimOptions& options = {});

struct Estimate {
  double mean = 0.0;
  double ci_halfwidth = 0.0;  // 99% normal-approximation half width
  std::size_t runs = 0;
};

// Mean of reward(marking at time t) over independent replications.
Estimate estimate_reward(const SanModel& model, const RewardVariable& reward,
                         double t, std::size_t runs, std::uint64_t seed);

// Mean first time the predicate becomes true, over replications where it
// does within the horizon; hits reports how many did.
Estimate estimate_hitting_time(const SanModel& model, const MarkingPredicate& pred,
                               double horizon, std::size_t runs, std::uint64_t seed,
                               std::size_t* hits = nullptr);

// Text lines "time<TAB>activity_name".
void write_trace(std::ostream& os, const SanModel& model, const SimRun& run);

}  // namespace sanperf
