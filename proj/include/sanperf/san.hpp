#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Stochastic activity networks: places, markings, timed/instantaneous
// activities with input gates and probabilistic cases. Models are immutable
// after construction; all operations here are pure.

namespace sanperf {

using PlaceId = std::uint32_t;
using ActivityId = std::uint32_t;
using GateId = std::uint32_t;
using TokenCount = std::uint32_t;

// Structural or semantic defect in a model (dangling reference, negative
// token count, vanishing cycle, bad rate, ...).
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Token assignment over all places of one model. One marking = one state.
class Marking {
 public:
  Marking() = default;
  explicit Marking(std::vector<TokenCount> tokens) : tokens_(std::move(tokens)) {}

  TokenCount tokens(PlaceId p) const {
    if (p >= tokens_.size()) {
      throw ModelError("marking: unknown place id " + std::to_string(p));
    }
    return tokens_[p];
  }
  std::size_t place_count() const { return tokens_.size(); }
  const std::vector<TokenCount>& raw() const { return tokens_; }
  std::vector<TokenCount> take() && { return std::move(tokens_); }

  std::size_t hash() const;
  bool operator==(const Marking&) const = default;

 private:
  std::vector<TokenCount> tokens_;
};

std::size_t hash_tokens(const std::vector<TokenCount>& tokens);

using MarkingPredicate = std::function<bool(const Marking&)>;
using MarkingValue = std::function<double(const Marking&)>;

struct Place {
  PlaceId id = 0;
  std::string name;
  TokenCount initial_tokens = 0;
};

// Enabling predicate attached to activities by id. Predicates must be pure.
struct InputGate {
  GateId id = 0;
  std::string name;
  MarkingPredicate predicate;
};

// One token-level effect of an output action. Ops apply in sequence, each
// seeing the marking produced by its predecessors.
struct TokenOp {
  enum class Kind { Add, Remove, SetZero, SetValue };
  PlaceId place = 0;
  Kind kind = Kind::Add;
  TokenCount amount = 0;                           // Add / Remove
  std::function<TokenCount(const Marking&)> value; // SetValue
};

struct Case {
  MarkingValue probability;  // may be marking-dependent; sums to 1 over cases
  std::vector<TokenOp> ops;
};

struct ExponentialDist {
  MarkingValue rate;  // per unit time, > 0 wherever the activity is enabled
};

struct DeterministicDist {
  MarkingValue delay;          // > 0 wherever the activity is enabled
  std::vector<double> levels;  // every value delay() can take (for expansion)
};

using Distribution = std::variant<ExponentialDist, DeterministicDist>;

struct Activity {
  enum class Kind { Timed, Instantaneous };

  ActivityId id = 0;
  std::string name;
  Kind kind = Kind::Timed;
  std::optional<Distribution> distribution;  // timed only
  std::vector<std::pair<PlaceId, TokenCount>> input_arcs;
  std::vector<GateId> input_gates;
  std::vector<Case> cases;
  // Resolution order among co-enabled instantaneous activities: higher fires
  // first, ties broken by declaration order.
  int priority = 0;

  bool timed() const { return kind == Kind::Timed; }
  bool deterministic() const {
    return distribution && std::holds_alternative<DeterministicDist>(*distribution);
  }
};

class SanModel {
 public:
  SanModel(std::string name, std::vector<Place> places,
           std::vector<Activity> activities, std::vector<InputGate> gates);

  const std::string& name() const { return name_; }
  const std::vector<Place>& places() const { return places_; }
  const std::vector<Activity>& activities() const { return activities_; }
  const std::vector<InputGate>& gates() const { return gates_; }

  const Place& place(PlaceId p) const;
  const Activity& activity(ActivityId a) const;
  const InputGate& gate(GateId g) const;
  std::optional<PlaceId> find_place(const std::string& name) const;
  std::optional<ActivityId> find_activity(const std::string& name) const;

  Marking initial_marking() const;

 private:
  std::string name_;
  std::vector<Place> places_;
  std::vector<Activity> activities_;
  std::vector<InputGate> gates_;
};

// Incremental construction helper; ids are assigned in declaration order.
class SanModelBuilder {
 public:
  explicit SanModelBuilder(std::string name) : name_(std::move(name)) {}

  PlaceId add_place(const std::string& name, TokenCount initial_tokens = 0);
  GateId add_gate(const std::string& name, MarkingPredicate predicate);

  ActivityId add_exponential(const std::string& name, MarkingValue rate,
                             std::vector<std::pair<PlaceId, TokenCount>> arcs,
                             std::vector<GateId> gates, std::vector<Case> cases);
  ActivityId add_deterministic(const std::string& name, MarkingValue delay,
                               std::vector<double> levels,
                               std::vector<std::pair<PlaceId, TokenCount>> arcs,
                               std::vector<GateId> gates, std::vector<Case> cases);
  ActivityId add_instantaneous(const std::string& name,
                               std::vector<std::pair<PlaceId, TokenCount>> arcs,
                               std::vector<GateId> gates, std::vector<Case> cases,
                               int priority = 0);

  // Constant helpers for the common non-marking-dependent pieces.
  static MarkingValue constant(double v) {
    return [v](const Marking&) { return v; };
  }
  static std::vector<Case> single_case(std::vector<TokenOp> ops);

  bool has_place(const std::string& name) const;
  SanModel build() &&;

 private:
  ActivityId add_activity(Activity a);

  std::string name_;
  std::vector<Place> places_;
  std::vector<Activity> activities_;
  std::vector<InputGate> gates_;
};

inline TokenOp add_tokens(PlaceId p, TokenCount n = 1) {
  return TokenOp{p, TokenOp::Kind::Add, n, {}};
}
inline TokenOp remove_tokens(PlaceId p, TokenCount n = 1) {
  return TokenOp{p, TokenOp::Kind::Remove, n, {}};
}
inline TokenOp set_zero(PlaceId p) {
  return TokenOp{p, TokenOp::Kind::SetZero, 0, {}};
}
inline TokenOp set_value(PlaceId p, std::function<TokenCount(const Marking&)> fn) {
  return TokenOp{p, TokenOp::Kind::SetValue, 0, std::move(fn)};
}

// Activities whose every input place holds enough tokens and whose every
// gate predicate evaluates true on m.
std::vector<ActivityId> enabled_activities(const SanModel& model, const Marking& m);
bool is_enabled(const SanModel& model, const Marking& m, ActivityId a);

// Fire one case of an enabled activity: input tokens removed, then the
// case's ops applied. The input marking is not mutated. Firing a disabled
// activity or a case with probability 0 at m is a precondition error.
Marking fire(const SanModel& model, const Marking& m, ActivityId a,
             std::size_t case_index);

// Case probabilities of activity a evaluated at m.
std::vector<double> case_probabilities(const SanModel& model, const Marking& m,
                                       ActivityId a);

struct ValidationReport {
  std::vector<std::string> findings;
  bool ok() const { return findings.empty(); }
};

// Static checks plus initial-marking evaluation of probabilities, rates and
// delays. Findings are reported, not thrown.
ValidationReport validate(const SanModel& model);

}  // namespace sanperf
