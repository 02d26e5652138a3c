#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sanperf/state_space.hpp"

// Transient CTMC analysis by uniformization: pi(t) as a Poisson-weighted sum
// of DTMC power iterates, with truncation chosen from the error tolerance.

namespace sanperf {

struct SolverSettings {
  double eps_left = 5e-10;
  double eps_right = 5e-10;
  double eps() const { return eps_left + eps_right; }
};

// Uniformized one-step DTMC P = I + Q/q in CSR form; row-stochastic.
struct UniformizedDtmc {
  double q = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  // out = v * P (distribution row vector times the matrix).
  void step(const std::vector<double>& v, std::vector<double>& out) const;
};

// q is the max total outgoing rate with 2% headroom (1 for an all-absorbing
// chain, where P degenerates to the identity).
UniformizedDtmc uniformize(const Ctmc& ctmc);

// Poisson(qt) weights for indices left..right with both tail masses below
// the respective tolerance; computed by scaled recursion around the mode so
// qt ~ 1e5 stays inside double range. Returned weights sum to within
// [1 - eps, 1] of one.
struct PoissonTerms {
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> weights;  // weights[i - left] for i in [left, right]

  double weight(std::size_t i) const {
    return (i < left || i > right) ? 0.0 : weights[i - left];
  }
  double total() const;
};

PoissonTerms poisson_terms(double qt, const SolverSettings& settings = {});

// pi(t) from the chain's initial distribution; entrywise within eps of the
// true transient vector, clipped and renormalized at output only.
std::vector<double> transient(const Ctmc& ctmc, double t,
                              const SolverSettings& settings = {});

// Same, starting from an arbitrary distribution v0.
std::vector<double> transient_from(const Ctmc& ctmc, std::vector<double> v0,
                                   double t, const SolverSettings& settings = {});

struct TransientSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> distributions;  // one vector per time
  double clip_correction = 0.0;  // largest negative clipped at output
  const Ctmc* chain = nullptr;
};

// One shared power sequence serves every time point (single pass up to the
// largest right truncation index). times must be sorted ascending.
TransientSolution transient_sweep(const Ctmc& ctmc, std::vector<double> times,
                                  const SolverSettings& settings = {});

// Function of the marking whose expectation under pi(t) is the measure.
struct RewardVariable {
  std::string name;
  std::function<double(const Marking&)> value;
};

std::vector<double> reward_vector(const Ctmc& ctmc, const RewardVariable& reward);

// value(t) = sum_s pi_s(t) * reward(marking(s)) for each solved time point.
std::vector<std::pair<double, double>> reward_instant(const TransientSolution& solution,
                                                      const RewardVariable& reward);

// Memory-lean sweep: projects each iterate onto the rewards instead of
// materializing per-time distributions. result[r][j] = reward r at times[j].
std::vector<std::vector<double>> reward_sweep(const Ctmc& ctmc,
                                              const std::vector<double>& times,
                                              const std::vector<RewardVariable>& rewards,
                                              const SolverSettings& settings = {});

}  // namespace sanperf
