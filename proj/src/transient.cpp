#include "sanperf/transient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sanperf {

namespace {

// Relative floor below which Poisson terms cannot influence the result at
// double precision; tails beyond it are orders below any usable eps.
constexpr double kTermFloor = 1e-22;

std::vector<double> initial_vector(const Ctmc& ctmc) {
  std::vector<double> v(ctmc.state_count(), 0.0);
  for (const auto& [idx, p] : ctmc.initial()) v[idx] += p;
  return v;
}

double clip_and_renormalize(std::vector<double>& v) {
  double worst = 0.0;
  double sum = 0.0;
  for (double& x : v) {
    if (x < 0.0) {
      worst = std::max(worst, -x);
      x = 0.0;
    }
    sum += x;
  }
  if (sum > 0.0) {
    for (double& x : v) x /= sum;
  }
  return worst;
}

}  // namespace

void UniformizedDtmc::step(const std::vector<double>& v, std::vector<double>& out) const {
  out.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double vi = v[i];
    if (vi == 0.0) continue;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      out[col[k]] += vi * val[k];
    }
  }
}

UniformizedDtmc uniformize(const Ctmc& ctmc) {
  const std::size_t n = ctmc.state_count();
  if (n == 0) throw ModelError("uniformize: empty CTMC");

  std::vector<double> exit(n, 0.0);
  for (const auto& t : ctmc.transitions()) exit[t.from] += t.rate;
  double max_exit = *std::max_element(exit.begin(), exit.end());
  double q = max_exit > 0.0 ? 1.02 * max_exit : 1.0;

  UniformizedDtmc p;
  p.q = q;
  p.n = n;
  p.row_ptr.assign(n + 1, 0);
  // Transitions arrive sorted by (from, to); one diagonal entry per row.
  std::vector<std::size_t> degree(n, 1);
  for (const auto& t : ctmc.transitions()) ++degree[t.from];
  for (std::size_t i = 0; i < n; ++i) p.row_ptr[i + 1] = p.row_ptr[i] + degree[i];
  p.col.resize(p.row_ptr[n]);
  p.val.resize(p.row_ptr[n]);

  std::vector<std::size_t> cursor(n);
  for (std::size_t i = 0; i < n; ++i) {
    cursor[i] = p.row_ptr[i] + 1;  // slot 0 of each row holds the diagonal
    p.col[p.row_ptr[i]] = static_cast<std::uint32_t>(i);
    p.val[p.row_ptr[i]] = 1.0 - exit[i] / q;
  }
  for (const auto& t : ctmc.transitions()) {
    p.col[cursor[t.from]] = t.to;
    p.val[cursor[t.from]] = t.rate / q;
    ++cursor[t.from];
  }
  return p;
}

double PoissonTerms::total() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

PoissonTerms poisson_terms(double qt, const SolverSettings& settings) {
  if (!(qt >= 0.0) || !std::isfinite(qt)) {
    throw ModelError("poisson_terms: qt must be finite and nonnegative");
  }
  PoissonTerms out;
  if (qt == 0.0) {
    out.left = out.right = 0;
    out.weights = {1.0};
    return out;
  }

  // Unnormalized weights around the mode (scaled so the mode term is 1),
  // extended until terms fall below the floor; then both ends trimmed so the
  // discarded mass stays within the respective tolerance.
  const std::size_t mode = static_cast<std::size_t>(qt);
  std::vector<double> down;  // mode-1, mode-2, ...
  double w = 1.0;
  for (std::size_t k = mode; k > 0; --k) {
    w *= static_cast<double>(k) / qt;
    if (w < kTermFloor) break;
    down.push_back(w);
  }
  std::vector<double> up;  // mode+1, mode+2, ...
  w = 1.0;
  for (std::size_t k = mode + 1;; ++k) {
    w *= qt / static_cast<double>(k);
    if (w < kTermFloor) break;
    up.push_back(w);
  }

  std::size_t lo = mode - down.size();
  std::vector<double> weights(down.rbegin(), down.rend());
  weights.push_back(1.0);
  weights.insert(weights.end(), up.begin(), up.end());

  double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  std::size_t first = 0;
  double left_mass = 0.0;
  while (first + 1 < weights.size() &&
         left_mass + weights[first] <= settings.eps_left * total) {
    left_mass += weights[first];
    ++first;
  }
  std::size_t last = weights.size();
  double right_mass = 0.0;
  while (last > first + 1 &&
         right_mass + weights[last - 1] <= settings.eps_right * total) {
    right_mass += weights[last - 1];
    --last;
  }

  out.left = lo + first;
  out.right = lo + last - 1;
  out.weights.assign(weights.begin() + static_cast<std::ptrdiff_t>(first),
                     weights.begin() + static_cast<std::ptrdiff_t>(last));
  for (double& x : out.weights) x /= total;
  return out;
}

namespace {

// Shared driver: walks the power sequence v(i) = v(i-1) * P once and hands
// each iterate to a sink together with its index.
template <typename Sink>
void iterate_power_sequence(const UniformizedDtmc& p, std::vector<double> v0,
                            std::size_t last_index, Sink&& sink) {
  std::vector<double> v = std::move(v0);
  std::vector<double> next(v.size());
  sink(std::size_t{0}, v);
  for (std::size_t i = 1; i <= last_index; ++i) {
    p.step(v, next);
    v.swap(next);
    sink(i, v);
  }
}

}  // namespace

std::vector<double> transient_from(const Ctmc& ctmc, std::vector<double> v0,
                                   double t, const SolverSettings& settings) {
  if (!(t >= 0.0)) throw ModelError("transient: t must be nonnegative");
  if (v0.size() != ctmc.state_count()) {
    throw ModelError("transient: initial vector size mismatch");
  }
  if (t == 0.0) return v0;

  UniformizedDtmc p = uniformize(ctmc);
  PoissonTerms terms = poisson_terms(p.q * t, settings);
  std::vector<double> result(ctmc.state_count(), 0.0);
  iterate_power_sequence(p, std::move(v0), terms.right,
                         [&](std::size_t i, const std::vector<double>& v) {
                           double w = terms.weight(i);
                           if (w == 0.0) return;
                           for (std::size_t s = 0; s < v.size(); ++s) {
                             result[s] += w * v[s];
                           }
                         });
  clip_and_renormalize(result);
  return result;
}

std::vector<double> transient(const Ctmc& ctmc, double t,
                              const SolverSettings& settings) {
  return transient_from(ctmc, initial_vector(ctmc), t, settings);
}

TransientSolution transient_sweep(const Ctmc& ctmc, std::vector<double> times,
                                  const SolverSettings& settings) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw ModelError("transient_sweep: times must be sorted ascending");
  }
  if (!times.empty() && times.front() < 0.0) {
    throw ModelError("transient_sweep: negative time point");
  }

  TransientSolution sol;
  sol.chain = &ctmc;
  sol.times = std::move(times);
  sol.distributions.assign(sol.times.size(), {});
  if (sol.times.empty()) return sol;

  UniformizedDtmc p = uniformize(ctmc);
  std::vector<PoissonTerms> terms(sol.times.size());
  std::size_t last = 0;
  for (std::size_t j = 0; j < sol.times.size(); ++j) {
    terms[j] = poisson_terms(p.q * sol.times[j], settings);
    last = std::max(last, terms[j].right);
    sol.distributions[j].assign(ctmc.state_count(), 0.0);
  }

  iterate_power_sequence(p, initial_vector(ctmc), last,
                         [&](std::size_t i, const std::vector<double>& v) {
                           for (std::size_t j = 0; j < sol.times.size(); ++j) {
                             double w = terms[j].weight(i);
                             if (w == 0.0) continue;
                             auto& dist = sol.distributions[j];
                             for (std::size_t s = 0; s < v.size(); ++s) {
                               dist[s] += w * v[s];
                             }
                           }
                         });

  for (auto& dist : sol.distributions) {
    sol.clip_correction = std::max(sol.clip_correction, clip_and_renormalize(dist));
  }
  return sol;
}

std::vector<double> reward_vector(const Ctmc& ctmc, const RewardVariable& reward) {
  std::vector<double> r(ctmc.state_count());
  for (std::uint32_t s = 0; s < ctmc.state_count(); ++s) {
    r[s] = reward.value(ctmc.state(s));
  }
  return r;
}

std::vector<std::pair<double, double>> reward_instant(const TransientSolution& solution,
                                                      const RewardVariable& reward) {
  if (solution.chain == nullptr) {
    throw ModelError("reward_instant: solution carries no chain");
  }
  std::vector<double> r = reward_vector(*solution.chain, reward);
  std::vector<std::pair<double, double>> out;
  out.reserve(solution.times.size());
  for (std::size_t j = 0; j < solution.times.size(); ++j) {
    const auto& dist = solution.distributions[j];
    double value = 0.0;
    for (std::size_t s = 0; s < dist.size(); ++s) value += dist[s] * r[s];
    out.emplace_back(solution.times[j], value);
  }
  return out;
}

std::vector<std::vector<double>> reward_sweep(const Ctmc& ctmc,
                                              const std::vector<double>& times,
                                              const std::vector<RewardVariable>& rewards,
                                              const SolverSettings& settings) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw ModelError("reward_sweep: times must be sorted ascending");
  }
  std::vector<std::vector<double>> result(rewards.size(),
                                          std::vector<double>(times.size(), 0.0));
  if (times.empty()) return result;
  if (!(times.front() >= 0.0)) throw ModelError("reward_sweep: negative time point");

  UniformizedDtmc p = uniformize(ctmc);
  std::vector<PoissonTerms> terms(times.size());
  std::size_t last = 0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    terms[j] = poisson_terms(p.q * times[j], settings);
    last = std::max(last, terms[j].right);
  }
  std::vector<std::vector<double>> rvecs;
  rvecs.reserve(rewards.size());
  for (const auto& rw : rewards) rvecs.push_back(reward_vector(ctmc, rw));

  // Each iterate contributes through its reward projections only, so the
  // pass needs O(states) memory regardless of how many time points there are.
  iterate_power_sequence(
      p, initial_vector(ctmc), last, [&](std::size_t i, const std::vector<double>& v) {
        for (std::size_t r = 0; r < rvecs.size(); ++r) {
          double dot = 0.0;
          const auto& rv = rvecs[r];
          for (std::size_t s = 0; s < v.size(); ++s) dot += v[s] * rv[s];
          for (std::size_t j = 0; j < times.size(); ++j) {
            double w = terms[j].weight(i);
            if (w != 0.0) result[r][j] += dot * w;
          }
        }
      });
  // Same normalization the full sweep applies to its distributions: divide
  // out the truncation deficit of the weight window.
  for (std::size_t j = 0; j < times.size(); ++j) {
    double total = terms[j].total();
    if (total > 0.0) {
      for (auto& r : result) r[j] /= total;
    }
  }
  return result;
}

}  // namespace sanperf
