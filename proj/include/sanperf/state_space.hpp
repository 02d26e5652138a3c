#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "sanperf/san.hpp"

// Compilation of a SAN into a CTMC: Erlang expansion of deterministic
// activities, breadth-first reachability, on-the-fly elimination of
// vanishing markings.

namespace sanperf {

struct ExplorationLimits {
  std::size_t max_states = 20'000'000;
  TokenCount max_tokens_per_place = 65'536;
};

// Exploration aborted because a limit was hit.
class LimitError : public std::runtime_error {
 public:
  LimitError(const std::string& what, std::size_t states_explored,
             std::size_t frontier_size)
      : std::runtime_error(what),
        states_explored(states_explored),
        frontier_size(frontier_size) {}
  std::size_t states_explored;
  std::size_t frontier_size;
};

// Explored tangible markings plus sparse transition rates. State indices
// follow discovery order; transitions are sorted by (from, to); no
// self-loops; the initial distribution sums to 1.
class Ctmc {
 public:
  struct Transition {
    std::uint32_t from;
    std::uint32_t to;
    double rate;
  };

  Ctmc(std::size_t place_count, std::vector<TokenCount> flat_states,
       std::vector<Transition> transitions,
       std::vector<std::pair<std::uint32_t, double>> initial);

  std::size_t state_count() const { return state_count_; }
  std::size_t place_count() const { return place_count_; }
  Marking state(std::uint32_t index) const;
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<std::pair<std::uint32_t, double>>& initial() const {
    return initial_;
  }

 private:
  std::size_t place_count_;
  std::size_t state_count_;
  std::vector<TokenCount> flat_states_;  // state_count * place_count tokens
  std::vector<Transition> transitions_;
  std::vector<std::pair<std::uint32_t, double>> initial_;
};

// Replace every deterministic activity by a chain of `stages` exponential
// stages of rate stages/T. A marking-dependent T is evaluated when the first
// stage fires and held fixed through the chain (latched in an auxiliary
// place); disabling mid-chain resets the chain. stages == 1 degenerates to a
// plain exponential of rate 1/T.
SanModel expand_erlang(const SanModel& model, unsigned stages);

// Follow instantaneous firings (highest priority first) from m until only
// tangible markings remain; returns the tangible distribution. A revisited
// marking along one chain is a vanishing cycle and rejected.
std::vector<std::pair<Marking, double>> resolve_tangible(const SanModel& model,
                                                         const Marking& m);

// Breadth-first CTMC generation. The model must be validated and free of
// deterministic activities (expand_erlang already applied).
Ctmc generate(const SanModel& model, const ExplorationLimits& limits = {});

// Text dump: header "states=N initial=<index:prob,...>", then one line per
// transition "from<TAB>to<TAB>rate".
void write_ctmc(std::ostream& os, const Ctmc& ctmc);

}  // namespace sanperf
