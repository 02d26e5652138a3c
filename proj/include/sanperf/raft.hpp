#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sanperf/des.hpp"
#include "sanperf/state_space.hpp"
#include "sanperf/transient.hpp"

// RAFT cluster performability models: response-time, failure-injection and
// recovery SANs built from a cluster configuration, plus the derived
// response-time CDF and unavailability curves.

namespace sanperf::raft {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class AnalysisMode { Response, Availability };
enum class InjectionMix { Mixed, BundleOnly };

// All parameters of the cluster model. Defaults are the standard preset
// ("table2"): delays in ms, rate keys carry their unit in the name
// (months are 30 days). Internally everything runs in milliseconds.
struct ClusterConfig {
  unsigned c = 3;        // cluster size, odd, >= 3
  unsigned n_f = 1;      // injected bursty failure count, 0 disables injection
  unsigned e_s = 20;     // Erlang stages approximating deterministic delays
  unsigned r_m = 10;     // max RAFT terms a lagging follower misses
  bool watchdog = false;
  AnalysisMode mode = AnalysisMode::Response;
  InjectionMix inject_mix = InjectionMix::Mixed;

  double t_a_ms = 1.0;        // application handling (exponential mean)
  double t_c_ms = 1.0;        // data-store commit delay
  double t_cl_ms = 50.0;      // client timeout
  double t_r_ms = 10.0;       // worst-case replica-leader delay (= 2*T_M_best)
  double t_m_best_ms = 5.0;   // best-case majority-leader delay
  double t_cr_ms = 1.0;       // client-replica delay
  double mean_follower_timeout_ms = 225.0;
  double mean_candidate_timeout_ms = 225.0;

  double lambda_f_h_per_month = 1.0 / 6.0;   // hardware failures
  double lambda_f_s_per_week = 1.0;          // software failures (process and bundle each)
  std::optional<double> lambda_f_si_per_ms;  // injected rate; default N_F/30
  double lambda_d_per_hour = 0.0;            // critical data-plane failures
  double lambda_r_h_per_hour = 1.0 / 12.0;   // hardware repair
  double lambda_r_s_per_minute = 1.0 / 3.0;  // software repair, no watchdog
  double lambda_r_sbw_per_ms = 1.0 / 182.9;  // bundle repair, watchdog
  double lambda_r_spw_per_s = 1.0 / 26.9;    // process repair, watchdog

  // Availability mode treats activities faster than this as instantaneous;
  // they are invisible at the hourly output resolution and would otherwise
  // stiffen the chain beyond what uniformization can sweep over 1000 h.
  double availability_fast_cutoff_ms = 1000.0;

  static constexpr double kMsPerSecond = 1e3;
  static constexpr double kMsPerMinute = 60e3;
  static constexpr double kMsPerHour = 3.6e6;
  static constexpr double kMsPerWeek = 168 * 3.6e6;
  static constexpr double kMsPerMonth = 720 * 3.6e6;  // 30-day months

  double lambda_f_h_per_ms() const { return lambda_f_h_per_month / kMsPerMonth; }
  double lambda_f_s_per_ms() const { return lambda_f_s_per_week / kMsPerWeek; }
  double lambda_d_per_ms() const { return lambda_d_per_hour / kMsPerHour; }
  double lambda_r_h_per_ms() const { return lambda_r_h_per_hour / kMsPerHour; }
  double lambda_r_s_per_ms() const { return lambda_r_s_per_minute / kMsPerMinute; }
  double lambda_r_sbw_per_ms_value() const { return lambda_r_sbw_per_ms; }
  double lambda_r_spw_per_ms() const { return lambda_r_spw_per_s / kMsPerSecond; }
  double injection_rate_per_ms() const {
    return lambda_f_si_per_ms.value_or(static_cast<double>(n_f) / 30.0);
  }

  unsigned majority_followers() const { return c / 2; }         // floor(C/2)
  unsigned majority_nodes() const { return c / 2 + 1; }         // floor(C/2)+1
  unsigned lag_threshold() const { return (c - 1) / 2 + 1; }    // lagging majority
};

// Throws ConfigError on any invariant violation (even C, negative times,
// T_R != 2*T_M_best, N_F > C, ...).
void validate_config(const ClusterConfig& cfg);

ClusterConfig table2_preset();

// Flat key=value file; unknown keys are rejected, missing keys keep the
// preset defaults. '#' starts a comment.
ClusterConfig parse_cluster_config(std::istream& in);
ClusterConfig load_cluster_config(const std::string& path);

// Effective configuration as ordered key/value text, suitable for metadata
// echo; parsing the echo reproduces the config.
std::vector<std::pair<std::string, std::string>> config_metadata(const ClusterConfig& cfg);

// Leader-to-majority delay T_M = ((C-1)/f_up) * T_M_best for
// f_up >= floor(C/2); empty when too few followers remain.
std::optional<double> majority_delay(const ClusterConfig& cfg, unsigned f_up);

struct RoleProbabilities {
  double safe_follower = 0.0;
  double majority = 0.0;
  double leader = 0.0;
};

// Failure-role split given the follower/leader counters before the failure;
// the triple always sums to one.
RoleProbabilities failure_role_probabilities(unsigned c, unsigned f_up, unsigned l_up);

// Superposition of independent Poisson failure processes.
double merged_failure_rate(double lambda_c, double lambda_d);

// The three submodels, standalone (each shares the cluster counter places).
SanModel build_response_time_model(const ClusterConfig& cfg);
SanModel build_failure_model(const ClusterConfig& cfg);
SanModel build_recovery_model(const ClusterConfig& cfg);

// Single SAN merging the submodels over the shared places. Response mode
// seeds one client event and enables injection; availability mode runs the
// long-term failure/repair dynamics only.
SanModel compose(const ClusterConfig& cfg);

// Reward factories bound to a composed model's places.
RewardVariable event_completed_reward(const SanModel& model);
RewardVariable cluster_available_reward(const SanModel& model, const ClusterConfig& cfg);

// P(event handled by t) on the given ms grid; built, expanded and solved.
std::vector<std::pair<double, double>> response_time_cdf(
    const ClusterConfig& cfg, const std::vector<double>& times_ms,
    const ExplorationLimits& limits = {}, const SolverSettings& settings = {});

// P_CU(t) = 1 - P(leader up and follower majority up) on the given ms grid.
std::vector<std::pair<double, double>> unavailability_curve(
    const ClusterConfig& cfg, const std::vector<double>& times_ms,
    const ExplorationLimits& limits = {}, const SolverSettings& settings = {});

}  // namespace sanperf::raft
