#include "sanperf/des.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace sanperf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{splitmix64(seed), splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ull),
                    splitmix64(seed ^ 0x5A5A5A5A5A5A5A5Aull),
                    splitmix64(~seed)};
  return std::mt19937_64(seq);
}

// Independent substream for replication r of a seeded experiment.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t r) {
  return splitmix64(seed ^ splitmix64(r));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sample_exponential(std::mt19937_64& rng, double rate) {
  double u;
  do {
    u = uniform01(rng);
  } while (u == 0.0);
  return -std::log(u) / rate;
}

std::size_t sample_case(std::mt19937_64& rng, const std::vector<double>& probs) {
  double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  return last_positive;  // cum can round to just below 1
}

struct PendingFiring {
  bool armed = false;
  double fire_at = 0.0;
};

}  // namespace

SimRun simulate(const SanModel& model, double horizon, std::uint64_t seed,
                const SimOptions& options) {
  std::mt19937_64 rng = make_engine(seed);
  Marking m = model.initial_marking();

  SimRun run;
  run.seed = seed;
  run.horizon = horizon;

  const auto& activities = model.activities();
  std::vector<PendingFiring> pending(activities.size());
  double now = 0.0;
  std::size_t instantaneous_streak = 0;

  auto check_stop = [&]() {
    if (!run.stopped && options.stop_when && options.stop_when(m)) {
      run.stopped = true;
      run.stop_time = now;
    }
  };

  auto settle_instantaneous = [&]() {
    for (;;) {
      if (run.stopped) return;
      const Activity* best = nullptr;
      for (const Activity& a : activities) {
        if (a.kind != Activity::Kind::Instantaneous) continue;
        if (!is_enabled(model, m, a.id)) continue;
        if (!best || a.priority > best->priority) best = &a;
      }
      if (!best) {
        instantaneous_streak = 0;
        return;
      }
      if (++instantaneous_streak > options.instantaneous_limit) {
        throw ModelError("simulate: vanishing livelock at activity '" + best->name +
                         "'");
      }
      std::vector<double> probs = case_probabilities(model, m, best->id);
      m = fire(model, m, best->id, sample_case(rng, probs));
      if (options.record_trace) {
        run.trace.push_back(TraceEntry{now, best->id, m.hash()});
      }
      check_stop();
    }
  };

  // Exponentials resample at every event (memoryless, and the rate may have
  // changed with the marking); a deterministic activity keeps its deadline
  // while it stays enabled and loses it when disabled.
  auto reschedule = [&]() {
    for (const Activity& a : activities) {
      if (a.kind != Activity::Kind::Timed) continue;
      bool enabled = is_enabled(model, m, a.id);
      PendingFiring& p = pending[a.id];
      if (!enabled) {
        p.armed = false;
        continue;
      }
      if (a.deterministic()) {
        if (!p.armed) {
          double delay = std::get<DeterministicDist>(*a.distribution).delay(m);
          if (!(delay > 0.0)) {
            throw ModelError("simulate: nonpositive delay in '" + a.name + "'");
          }
          p.armed = true;
          p.fire_at = now + delay;
        }
      } else {
        double rate = std::get<ExponentialDist>(*a.distribution).rate(m);
        if (!(rate > 0.0)) {
          throw ModelError("simulate: nonpositive rate in '" + a.name + "'");
        }
        p.armed = true;
        p.fire_at = now + sample_exponential(rng, rate);
      }
    }
  };

  check_stop();
  settle_instantaneous();
  reschedule();

  while (!run.stopped) {
    const Activity* next = nullptr;
    double best_time = std::numeric_limits<double>::infinity();
    for (const Activity& a : activities) {
      if (a.kind != Activity::Kind::Timed) continue;
      const PendingFiring& p = pending[a.id];
      if (p.armed && p.fire_at < best_time) {
        best_time = p.fire_at;
        next = &a;
      }
    }
    if (!next || best_time > horizon) break;

    now = best_time;
    pending[next->id].armed = false;
    std::vector<double> probs = case_probabilities(model, m, next->id);
    m = fire(model, m, next->id, sample_case(rng, probs));
    if (options.record_trace) {
      run.trace.push_back(TraceEntry{now, next->id, m.hash()});
    }
    check_stop();
    settle_instantaneous();
    reschedule();
  }

  run.final_marking = std::move(m);
  return run;
}

namespace {

Estimate summarize(const std::vector<double>& samples) {
  Estimate e;
  e.runs = samples.size();
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double x : samples) sum += x;
  e.mean = sum / static_cast<double>(samples.size());
  if (samples.size() < 2) return e;
  double ss = 0.0;
  for (double x : samples) ss += (x - e.mean) * (x - e.mean);
  double var = ss / static_cast<double>(samples.size() - 1);
  constexpr double z99 = 2.5758293035489004;
  e.ci_halfwidth = z99 * std::sqrt(var / static_cast<double>(samples.size()));
  return e;
}

}  // namespace

Estimate estimate_reward(const SanModel& model, const RewardVariable& reward,
                         double t, std::size_t runs, std::uint64_t seed) {
  if (runs < 2) throw ModelError("estimate_reward: needs at least 2 runs");
  std::vector<double> samples;
  samples.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    SimRun sim = simulate(model, t, replication_seed(seed, r));
    samples.push_back(reward.value(sim.final_marking));
  }
  return summarize(samples);
}

Estimate estimate_hitting_time(const SanModel& model, const MarkingPredicate& pred,
                               double horizon, std::size_t runs, std::uint64_t seed,
                               std::size_t* hits) {
  if (runs < 2) throw ModelError("estimate_hitting_time: needs at least 2 runs");
  std::vector<double> samples;
  samples.reserve(runs);
  SimOptions options;
  options.stop_when = pred;
  for (std::size_t r = 0; r < runs; ++r) {
    SimRun sim = simulate(model, horizon, replication_seed(seed, r), options);
    if (sim.stopped) samples.push_back(sim.stop_time);
  }
  if (hits) *hits = samples.size();
  return summarize(samples);
}

void write_trace(std::ostream& os, const SanModel& model, const SimRun& run) {
  for (const TraceEntry& e : run.trace) {
    os << e.time << '\t' << model.activity(e.activity).name << '\n';
  }
}

}  // namespace sanperf
