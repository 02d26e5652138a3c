#include "sanperf/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <unordered_map>

namespace sanperf {

namespace {

constexpr std::size_t kVanishingDepthLimit = 100'000;

// Matches an evaluated delay against the declared level set.
std::size_t level_index(const std::vector<double>& levels, double delay,
                        const std::string& activity_name) {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - delay) <= 1e-9 * std::max(1.0, std::abs(levels[i]))) {
      return i;
    }
  }
  throw ModelError("activity '" + activity_name + "': delay " +
                   std::to_string(delay) + " matches no declared level");
}

}  // namespace

Ctmc::Ctmc(std::size_t place_count, std::vector<TokenCount> flat_states,
           std::vector<Transition> transitions,
           std::vector<std::pair<std::uint32_t, double>> initial)
    : place_count_(place_count),
      state_count_(place_count == 0 ? 0 : flat_states.size() / place_count),
      flat_states_(std::move(flat_states)),
      transitions_(std::move(transitions)),
      initial_(std::move(initial)) {
  if (place_count_ == 0 || flat_states_.size() % place_count_ != 0) {
    throw ModelError("ctmc: malformed state storage");
  }
  double init_sum = 0.0;
  for (const auto& [idx, p] : initial_) {
    if (idx >= state_count_) throw ModelError("ctmc: initial index out of range");
    init_sum += p;
  }
  if (std::abs(init_sum - 1.0) > 1e-12) {
    throw ModelError("ctmc: initial distribution sums to " + std::to_string(init_sum));
  }
  for (const Transition& t : transitions_) {
    if (t.from >= state_count_ || t.to >= state_count_) {
      throw ModelError("ctmc: transition index out of range");
    }
    if (t.from == t.to) throw ModelError("ctmc: self-loop transition");
    if (!(t.rate > 0.0) || !std::isfinite(t.rate)) {
      throw ModelError("ctmc: nonpositive transition rate");
    }
  }
}

Marking Ctmc::state(std::uint32_t index) const {
  if (index >= state_count_) throw ModelError("ctmc: state index out of range");
  auto begin = flat_states_.begin() + static_cast<std::ptrdiff_t>(index) *
                                          static_cast<std::ptrdiff_t>(place_count_);
  return Marking(std::vector<TokenCount>(begin, begin + place_count_));
}

SanModel expand_erlang(const SanModel& model, unsigned stages) {
  if (stages == 0) {
    throw ModelError("expand_erlang: stages must be >= 1");
  }

  SanModelBuilder b(model.name());
  for (const Place& p : model.places()) b.add_place(p.name, p.initial_tokens);
  for (const InputGate& g : model.gates()) b.add_gate(g.name, g.predicate);

  for (const Activity& a : model.activities()) {
    if (a.kind == Activity::Kind::Instantaneous) {
      std::vector<Case> cases = a.cases;
      b.add_instantaneous(a.name, a.input_arcs, a.input_gates, cases, a.priority);
      continue;
    }
    if (!a.deterministic()) {
      const auto& dist = std::get<ExponentialDist>(*a.distribution);
      std::vector<Case> cases = a.cases;
      b.add_exponential(a.name, dist.rate, a.input_arcs, a.input_gates, cases);
      continue;
    }

    const auto& dist = std::get<DeterministicDist>(*a.distribution);
    MarkingValue delay = dist.delay;
    const std::vector<double> levels = dist.levels;
    const std::string name = a.name;

    if (stages == 1) {
      // Erlang-1 is exponential: rate 1/T, original arcs and gates intact.
      MarkingValue rate = [delay](const Marking& m) { return 1.0 / delay(m); };
      std::vector<Case> cases = a.cases;
      b.add_exponential(a.name, rate, a.input_arcs, a.input_gates, cases);
      continue;
    }

    const bool multi_level = levels.size() > 1;
    PlaceId phase = b.add_place("erlang_phase:" + name, 0);
    PlaceId latch = multi_level ? b.add_place("erlang_latch:" + name, 0) : 0;

    // Capture the original enabling condition: the stage activity tests
    // the arcs without consuming them until the final stage completes.
    std::vector<std::pair<PlaceId, TokenCount>> arcs = a.input_arcs;
    std::vector<MarkingPredicate> gate_preds;
    for (GateId g : a.input_gates) gate_preds.push_back(model.gate(g).predicate);
    auto armed = [arcs, gate_preds](const Marking& m) {
      for (const auto& [place, need] : arcs) {
        if (m.tokens(place) < need) return false;
      }
      for (const auto& pred : gate_preds) {
        if (!pred(m)) return false;
      }
      return true;
    };
    GateId armed_gate = b.add_gate(name + ":armed", armed);

    double n = static_cast<double>(stages);
    MarkingValue rate;
    if (multi_level) {
      // Phase 0 samples T from the current marking; later stages run at the
      // rate latched when the first stage fired.
      auto lv = levels;
      rate = [delay, lv, n, phase, latch, name](const Marking& m) {
        if (m.tokens(phase) == 0) return n / delay(m);
        TokenCount idx = m.tokens(latch);
        if (idx == 0 || idx > lv.size()) {
          throw ModelError("activity '" + name + "': latch out of range");
        }
        return n / lv[idx - 1];
      };
    } else {
      double t = levels[0];
      rate = [n, t](const Marking&) { return n / t; };
    }

    std::vector<Case> cases;
    {
      Case advance;
      advance.probability = [phase, stages](const Marking& m) {
        return m.tokens(phase) + 1 < stages ? 1.0 : 0.0;
      };
      if (multi_level) {
        auto lv = levels;
        advance.ops.push_back(set_value(latch, [delay, lv, phase, latch, name](
                                                   const Marking& m) {
          if (m.tokens(phase) > 0) return m.tokens(latch);
          return static_cast<TokenCount>(level_index(lv, delay(m), name) + 1);
        }));
      }
      advance.ops.push_back(add_tokens(phase, 1));
      cases.push_back(std::move(advance));
    }
    for (const Case& orig : a.cases) {
      Case done;
      MarkingValue p = orig.probability;
      done.probability = [p, phase, stages](const Marking& m) {
        return m.tokens(phase) + 1 == stages ? p(m) : 0.0;
      };
      for (const auto& [place, need] : a.input_arcs) {
        done.ops.push_back(remove_tokens(place, need));
      }
      done.ops.insert(done.ops.end(), orig.ops.begin(), orig.ops.end());
      done.ops.push_back(set_zero(phase));
      if (multi_level) done.ops.push_back(set_zero(latch));
      cases.push_back(std::move(done));
    }
    b.add_exponential(name, rate, {}, {armed_gate}, cases);

    // Disabling mid-chain discards progress (the in-flight transfer is lost).
    GateId abort_gate = b.add_gate(
        name + ":interrupted", [armed, phase](const Marking& m) {
          return m.tokens(phase) > 0 && !armed(m);
        });
    std::vector<TokenOp> reset_ops{set_zero(phase)};
    if (multi_level) reset_ops.push_back(set_zero(latch));
    b.add_instantaneous(name + ":abort", {}, {abort_gate},
                        SanModelBuilder::single_case(std::move(reset_ops)),
                        /*priority=*/1000);
  }
  return std::move(b).build();
}

std::vector<std::pair<Marking, double>> resolve_tangible(const SanModel& model,
                                                         const Marking& start) {
  std::vector<std::pair<Marking, double>> out;
  std::vector<Marking> path;

  // Highest priority first, declaration order breaking ties.
  auto pick_instantaneous = [&](const Marking& m) -> std::optional<ActivityId> {
    std::optional<ActivityId> best;
    int best_priority = 0;
    for (const Activity& a : model.activities()) {
      if (a.kind != Activity::Kind::Instantaneous) continue;
      if (!is_enabled(model, m, a.id)) continue;
      if (!best || a.priority > best_priority) {
        best = a.id;
        best_priority = a.priority;
      }
    }
    return best;
  };

  std::function<void(const Marking&, double, std::size_t)> walk =
      [&](const Marking& m, double weight, std::size_t depth) {
        if (depth > kVanishingDepthLimit) {
          throw ModelError("vanishing resolution exceeded depth limit");
        }
        auto next = pick_instantaneous(m);
        if (!next) {
          for (auto& [tm, w] : out) {
            if (tm == m) {
              w += weight;
              return;
            }
          }
          out.emplace_back(m, weight);
          return;
        }
        if (std::find(path.begin(), path.end(), m) != path.end()) {
          throw ModelError("vanishing-marking cycle at activity '" +
                           model.activity(*next).name + "' (non-well-specified SAN)");
        }
        path.push_back(m);
        std::vector<double> probs = case_probabilities(model, m, *next);
        for (std::size_t c = 0; c < probs.size(); ++c) {
          if (probs[c] <= 0.0) continue;
          walk(fire(model, m, *next, c), weight * probs[c], depth + 1);
        }
        path.pop_back();
      };

  walk(start, 1.0, 0);
  return out;
}

namespace {

// Interns markings into a flat arena; index = discovery order.
class StateStore {
 public:
  explicit StateStore(std::size_t place_count) : place_count_(place_count) {}

  std::pair<std::uint32_t, bool> intern(const Marking& m) {
    std::size_t h = m.hash();
    auto [it, fresh] = buckets_.try_emplace(h);
    for (std::uint32_t idx : it->second) {
      if (equals(idx, m)) return {idx, false};
    }
    (void)fresh;
    std::uint32_t idx = static_cast<std::uint32_t>(size());
    arena_.insert(arena_.end(), m.raw().begin(), m.raw().end());
    it->second.push_back(idx);
    return {idx, true};
  }

  std::size_t size() const { return place_count_ ? arena_.size() / place_count_ : 0; }
  std::vector<TokenCount> take_arena() && { return std::move(arena_); }

  Marking marking(std::uint32_t idx) const {
    auto begin = arena_.begin() + static_cast<std::ptrdiff_t>(idx) *
                                      static_cast<std::ptrdiff_t>(place_count_);
    return Marking(std::vector<TokenCount>(begin, begin + place_count_));
  }

 private:
  bool equals(std::uint32_t idx, const Marking& m) const {
    const TokenCount* base = arena_.data() + std::size_t{idx} * place_count_;
    return std::equal(base, base + place_count_, m.raw().data());
  }

  std::size_t place_count_;
  std::vector<TokenCount> arena_;
  std::unordered_map<std::size_t, std::vector<std::uint32_t>> buckets_;
};

void check_token_cap(const Marking& m, const ExplorationLimits& limits,
                     std::size_t explored, std::size_t frontier) {
  for (TokenCount t : m.raw()) {
    if (t > limits.max_tokens_per_place) {
      throw LimitError("token count " + std::to_string(t) +
                           " exceeds max_tokens_per_place (likely a model bug)",
                       explored, frontier);
    }
  }
}

}  // namespace

Ctmc generate(const SanModel& model, const ExplorationLimits& limits) {
  for (const Activity& a : model.activities()) {
    if (a.deterministic()) {
      throw ModelError("generate: deterministic activity '" + a.name +
                       "' present; apply expand_erlang first");
    }
  }

  const std::size_t n_places = model.places().size();
  StateStore store(n_places);
  std::deque<std::uint32_t> frontier;

  auto intern_checked = [&](const Marking& m) {
    check_token_cap(m, limits, store.size(), frontier.size());
    auto [idx, fresh] = store.intern(m);
    if (fresh) {
      if (store.size() > limits.max_states) {
        throw LimitError(
            "state space exceeds max_states=" + std::to_string(limits.max_states),
            store.size(), frontier.size());
      }
      frontier.push_back(idx);
    }
    return idx;
  };

  std::vector<std::pair<std::uint32_t, double>> initial;
  for (const auto& [m, p] : resolve_tangible(model, model.initial_marking())) {
    initial.emplace_back(intern_checked(m), p);
  }

  std::vector<Ctmc::Transition> transitions;
  while (!frontier.empty()) {
    std::uint32_t src = frontier.front();
    frontier.pop_front();
    const Marking m = store.marking(src);

    std::map<std::uint32_t, double> row;
    for (const Activity& a : model.activities()) {
      if (a.kind != Activity::Kind::Timed) continue;
      if (!is_enabled(model, m, a.id)) continue;
      double rate = std::get<ExponentialDist>(*a.distribution).rate(m);
      if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ModelError("activity '" + a.name + "': rate " + std::to_string(rate) +
                         " on a reachable marking");
      }
      std::vector<double> probs = case_probabilities(model, m, a.id);
      for (std::size_t c = 0; c < probs.size(); ++c) {
        if (probs[c] <= 0.0) continue;
        Marking next = fire(model, m, a.id, c);
        for (const auto& [tm, q] : resolve_tangible(model, next)) {
          std::uint32_t dst = intern_checked(tm);
          if (dst == src) continue;  // CTMC self-loops carry no information
          row[dst] += rate * probs[c] * q;
        }
      }
    }
    for (const auto& [dst, r] : row) {
      transitions.push_back(Ctmc::Transition{src, dst, r});
    }
  }

  std::sort(transitions.begin(), transitions.end(),
            [](const Ctmc::Transition& a, const Ctmc::Transition& b) {
              return a.from != b.from ? a.from < b.from : a.to < b.to;
            });
  return Ctmc(n_places, std::move(store).take_arena(), std::move(transitions),
              std::move(initial));
}

void write_ctmc(std::ostream& os, const Ctmc& ctmc) {
  os << "states=" << ctmc.state_count() << " initial=";
  bool first = true;
  for (const auto& [idx, p] : ctmc.initial()) {
    if (!first) os << ',';
    os << idx << ':' << p;
    first = false;
  }
  os << '\n';
  for (const auto& t : ctmc.transitions()) {
    os << t.from << '\t' << t.to << '\t' << t.rate << '\n';
  }
}

}  // namespace sanperf
