#include "sanperf/san.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sanperf {

namespace {

constexpr double kProbSumTol = 1e-12;

}  // namespace

std::size_t hash_tokens(const std::vector<TokenCount>& tokens) {
  // FNV-1a over the token words.
  std::uint64_t h = 1469598103934665603ull;
  for (TokenCount t : tokens) {
    h ^= t;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

std::size_t Marking::hash() const { return hash_tokens(tokens_); }

SanModel::SanModel(std::string name, std::vector<Place> places,
                   std::vector<Activity> activities, std::vector<InputGate> gates)
    : name_(std::move(name)),
      places_(std::move(places)),
      activities_(std::move(activities)),
      gates_(std::move(gates)) {
  if (places_.empty()) {
    throw ModelError("model '" + name_ + "' has no places");
  }
}

const Place& SanModel::place(PlaceId p) const {
  if (p >= places_.size()) {
    throw ModelError("unknown place id " + std::to_string(p));
  }
  return places_[p];
}

const Activity& SanModel::activity(ActivityId a) const {
  if (a >= activities_.size()) {
    throw ModelError("unknown activity id " + std::to_string(a));
  }
  return activities_[a];
}

const InputGate& SanModel::gate(GateId g) const {
  if (g >= gates_.size()) {
    throw ModelError("unknown gate id " + std::to_string(g));
  }
  return gates_[g];
}

std::optional<PlaceId> SanModel::find_place(const std::string& name) const {
  for (const Place& p : places_) {
    if (p.name == name) return p.id;
  }
  return std::nullopt;
}

std::optional<ActivityId> SanModel::find_activity(const std::string& name) const {
  for (const Activity& a : activities_) {
    if (a.name == name) return a.id;
  }
  return std::nullopt;
}

Marking SanModel::initial_marking() const {
  std::vector<TokenCount> tokens(places_.size(), 0);
  for (const Place& p : places_) tokens[p.id] = p.initial_tokens;
  return Marking(std::move(tokens));
}

PlaceId SanModelBuilder::add_place(const std::string& name, TokenCount initial_tokens) {
  if (has_place(name)) {
    throw ModelError("duplicate place name '" + name + "'");
  }
  PlaceId id = static_cast<PlaceId>(places_.size());
  places_.push_back(Place{id, name, initial_tokens});
  return id;
}

bool SanModelBuilder::has_place(const std::string& name) const {
  return std::any_of(places_.begin(), places_.end(),
                     [&](const Place& p) { return p.name == name; });
}

GateId SanModelBuilder::add_gate(const std::string& name, MarkingPredicate predicate) {
  GateId id = static_cast<GateId>(gates_.size());
  gates_.push_back(InputGate{id, name, std::move(predicate)});
  return id;
}

ActivityId SanModelBuilder::add_activity(Activity a) {
  a.id = static_cast<ActivityId>(activities_.size());
  activities_.push_back(std::move(a));
  return activities_.back().id;
}

ActivityId SanModelBuilder::add_exponential(
    const std::string& name, MarkingValue rate,
    std::vector<std::pair<PlaceId, TokenCount>> arcs, std::vector<GateId> gates,
    std::vector<Case> cases) {
  Activity a;
  a.name = name;
  a.kind = Activity::Kind::Timed;
  a.distribution = ExponentialDist{std::move(rate)};
  a.input_arcs = std::move(arcs);
  a.input_gates = std::move(gates);
  a.cases = std::move(cases);
  return add_activity(std::move(a));
}

ActivityId SanModelBuilder::add_deterministic(
    const std::string& name, MarkingValue delay, std::vector<double> levels,
    std::vector<std::pair<PlaceId, TokenCount>> arcs, std::vector<GateId> gates,
    std::vector<Case> cases) {
  if (levels.empty()) {
    throw ModelError("deterministic activity '" + name + "' needs delay levels");
  }
  Activity a;
  a.name = name;
  a.kind = Activity::Kind::Timed;
  a.distribution = DeterministicDist{std::move(delay), std::move(levels)};
  a.input_arcs = std::move(arcs);
  a.input_gates = std::move(gates);
  a.cases = std::move(cases);
  return add_activity(std::move(a));
}

ActivityId SanModelBuilder::add_instantaneous(
    const std::string& name, std::vector<std::pair<PlaceId, TokenCount>> arcs,
    std::vector<GateId> gates, std::vector<Case> cases, int priority) {
  Activity a;
  a.name = name;
  a.kind = Activity::Kind::Instantaneous;
  a.input_arcs = std::move(arcs);
  a.input_gates = std::move(gates);
  a.cases = std::move(cases);
  a.priority = priority;
  return add_activity(std::move(a));
}

std::vector<Case> SanModelBuilder::single_case(std::vector<TokenOp> ops) {
  std::vector<Case> cases(1);
  cases[0].probability = constant(1.0);
  cases[0].ops = std::move(ops);
  return cases;
}

SanModel SanModelBuilder::build() && {
  return SanModel(std::move(name_), std::move(places_), std::move(activities_),
                  std::move(gates_));
}

bool is_enabled(const SanModel& model, const Marking& m, ActivityId id) {
  const Activity& a = model.activity(id);
  for (const auto& [place, need] : a.input_arcs) {
    if (m.tokens(place) < need) return false;
  }
  for (GateId g : a.input_gates) {
    if (!model.gate(g).predicate(m)) return false;
  }
  return true;
}

std::vector<ActivityId> enabled_activities(const SanModel& model, const Marking& m) {
  if (m.place_count() != model.places().size()) {
    throw ModelError("marking does not match model place count");
  }
  std::vector<ActivityId> out;
  for (const Activity& a : model.activities()) {
    if (is_enabled(model, m, a.id)) out.push_back(a.id);
  }
  return out;
}

std::vector<double> case_probabilities(const SanModel& model, const Marking& m,
                                       ActivityId id) {
  const Activity& a = model.activity(id);
  std::vector<double> probs;
  probs.reserve(a.cases.size());
  double sum = 0.0;
  for (const Case& c : a.cases) {
    double p = c.probability(m);
    if (p < 0.0 || !std::isfinite(p)) {
      throw ModelError("activity '" + a.name + "': case probability " +
                       std::to_string(p) + " out of range");
    }
    probs.push_back(p);
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTol) {
    throw ModelError("activity '" + a.name + "': case probabilities sum to " +
                     std::to_string(sum));
  }
  return probs;
}

Marking fire(const SanModel& model, const Marking& m, ActivityId id,
             std::size_t case_index) {
  const Activity& a = model.activity(id);
  if (!is_enabled(model, m, id)) {
    throw ModelError("firing disabled activity '" + a.name + "'");
  }
  if (case_index >= a.cases.size()) {
    throw ModelError("activity '" + a.name + "': case index " +
                     std::to_string(case_index) + " out of range");
  }
  if (a.cases[case_index].probability(m) <= 0.0) {
    throw ModelError("activity '" + a.name + "': case " +
                     std::to_string(case_index) + " has zero probability here");
  }

  std::vector<TokenCount> tokens = m.raw();
  for (const auto& [place, need] : a.input_arcs) {
    // Enabling already guaranteed tokens >= need.
    tokens[place] -= need;
  }
  for (const TokenOp& op : a.cases[case_index].ops) {
    if (op.place >= tokens.size()) {
      throw ModelError("activity '" + a.name + "': op references unknown place " +
                       std::to_string(op.place));
    }
    switch (op.kind) {
      case TokenOp::Kind::Add:
        tokens[op.place] += op.amount;
        break;
      case TokenOp::Kind::Remove:
        if (tokens[op.place] < op.amount) {
          throw ModelError("activity '" + a.name + "' would drive place '" +
                           model.place(op.place).name + "' negative");
        }
        tokens[op.place] -= op.amount;
        break;
      case TokenOp::Kind::SetZero:
        tokens[op.place] = 0;
        break;
      case TokenOp::Kind::SetValue:
        tokens[op.place] = op.value(Marking(std::vector<TokenCount>(tokens)));
        break;
    }
  }
  return Marking(std::move(tokens));
}

ValidationReport validate(const SanModel& model) {
  ValidationReport report;
  auto flag = [&](const std::string& msg) { report.findings.push_back(msg); };

  const std::size_t n_places = model.places().size();
  const std::size_t n_gates = model.gates().size();
  const Marking m0 = model.initial_marking();

  for (const Activity& a : model.activities()) {
    for (const auto& [place, need] : a.input_arcs) {
      if (place >= n_places) {
        flag("activity '" + a.name + "': dangling place reference " +
             std::to_string(place));
      }
      if (need == 0) flag("activity '" + a.name + "': zero-weight input arc");
    }
    for (GateId g : a.input_gates) {
      if (g >= n_gates) {
        flag("activity '" + a.name + "': dangling gate reference " +
             std::to_string(g));
      }
    }
    for (const Case& c : a.cases) {
      for (const TokenOp& op : c.ops) {
        if (op.place >= n_places) {
          flag("activity '" + a.name + "': dangling place reference in output action");
        }
      }
    }
    if (a.cases.empty()) {
      flag("activity '" + a.name + "': no cases");
      continue;
    }
    try {
      double sum = 0.0;
      bool prob_ok = true;
      for (const Case& c : a.cases) {
        double p = c.probability(m0);
        if (p < 0.0 || p > 1.0 || !std::isfinite(p)) {
          flag("activity '" + a.name + "': case probability " + std::to_string(p) +
               " out of [0,1] on the initial marking");
          prob_ok = false;
        } else {
          sum += p;
        }
      }
      if (prob_ok && std::abs(sum - 1.0) > kProbSumTol) {
        std::ostringstream os;
        os << "activity '" << a.name << "': case probabilities sum to " << sum
           << " on the initial marking";
        flag(os.str());
      }
    } catch (const ModelError& e) {
      flag("activity '" + a.name + "': case evaluation failed: " + e.what());
    }

    if (a.kind == Activity::Kind::Timed) {
      if (!a.distribution) {
        flag("timed activity '" + a.name + "' has no distribution");
      } else if (const auto* e = std::get_if<ExponentialDist>(&*a.distribution)) {
        // A marking-dependent rate is only meaningful where the activity is
        // enabled; exploration re-checks positivity on every reachable marking.
        try {
          if (is_enabled(model, m0, a.id)) {
            double r = e->rate(m0);
            if (!(r > 0.0) || !std::isfinite(r)) {
              flag("activity '" + a.name + "': nonpositive rate " +
                   std::to_string(r) + " on the initial marking");
            }
          }
        } catch (const ModelError& err) {
          flag("activity '" + a.name + "': rate evaluation failed: " + err.what());
        }
      } else if (const auto* d = std::get_if<DeterministicDist>(&*a.distribution)) {
        for (double lv : d->levels) {
          if (!(lv > 0.0) || !std::isfinite(lv)) {
            flag("activity '" + a.name + "': nonpositive delay level " +
                 std::to_string(lv));
          }
        }
        if (d->levels.empty()) flag("activity '" + a.name + "': no delay levels");
      }
    } else if (a.distribution) {
      flag("instantaneous activity '" + a.name + "' carries a distribution");
    }
  }
  return report;
}

}  // namespace sanperf
