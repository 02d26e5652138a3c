#include "sanperf/raft.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sanperf/text_format.hpp"

namespace sanperf::raft {

namespace {

// Instantaneous resolution order (higher fires first). Chosen so that fast
// physical steps resolve before slow ones when the availability cutoff turns
// both into instantaneous activities.
constexpr int kPrioClassify = 100;
constexpr int kPrioWinElection = 90;
constexpr int kPrioDiscoverLeader = 85;
constexpr int kPrioAdmitFollower = 80;
constexpr int kPrioLagDivert = 70;
constexpr int kPrioLagReconcile = 65;
constexpr int kPrioRepair = 50;
constexpr int kPrioPoolTimeout = 40;
constexpr int kPrioFollowerTimeout = 30;
constexpr int kPrioEventPath = 10;

struct Features {
  bool event_structure = false;
  bool event_token = false;
  bool injection_structure = false;
  bool injection_tokens = false;
  bool long_term = false;
  bool recovery = false;
  bool fast_cutoff = false;
};

std::vector<double> majority_delay_levels(const ClusterConfig& cfg) {
  std::vector<double> levels;
  for (unsigned f = cfg.majority_followers(); f <= cfg.c - 1; ++f) {
    levels.push_back((cfg.c - 1.0) / static_cast<double>(f) * cfg.t_m_best_ms);
  }
  return levels;
}

SanModel build_raft_san(const ClusterConfig& cfg, const Features& feat,
                        const std::string& name) {
  validate_config(cfg);
  SanModelBuilder b(name);

  const unsigned C = cfg.c;
  const unsigned maj_followers = cfg.majority_followers();
  const unsigned maj_nodes = cfg.majority_nodes();
  const double cutoff = feat.fast_cutoff ? cfg.availability_fast_cutoff_ms : 0.0;
  const double tmb = cfg.t_m_best_ms;

  const PlaceId leader_up = b.add_place("LeaderUp", 1);
  const PlaceId followers_up = b.add_place("FollowersUp", C - 1);
  const PlaceId nodes_up = b.add_place("NodesUp", C);
  const PlaceId counter = b.add_place("CounterFailures", 0);

  // Timed unless the availability cutoff says the step is too fast to matter
  // at the output resolution.
  auto add_exp = [&](const std::string& n, MarkingValue rate, double mean_ms,
                     std::vector<std::pair<PlaceId, TokenCount>> arcs,
                     std::vector<GateId> gates, std::vector<Case> cases, int prio) {
    if (cutoff > 0.0 && mean_ms < cutoff) {
      b.add_instantaneous(n, std::move(arcs), std::move(gates), std::move(cases), prio);
    } else {
      b.add_exponential(n, std::move(rate), std::move(arcs), std::move(gates),
                        std::move(cases));
    }
  };
  auto add_det = [&](const std::string& n, MarkingValue delay,
                     std::vector<double> levels,
                     std::vector<std::pair<PlaceId, TokenCount>> arcs,
                     std::vector<GateId> gates, std::vector<Case> cases, int prio) {
    double worst = *std::max_element(levels.begin(), levels.end());
    if (cutoff > 0.0 && worst < cutoff) {
      b.add_instantaneous(n, std::move(arcs), std::move(gates), std::move(cases), prio);
    } else {
      b.add_deterministic(n, std::move(delay), std::move(levels), std::move(arcs),
                          std::move(gates), std::move(cases));
    }
  };
  auto one = [&](std::vector<TokenOp> ops) {
    return SanModelBuilder::single_case(std::move(ops));
  };

  const GateId g_up =
      b.add_gate("LeaderAndMajorityUp", [leader_up, followers_up, maj_followers](
                                            const Marking& m) {
        return m.tokens(leader_up) >= 1 && m.tokens(followers_up) >= maj_followers;
      });

  // Leader-to-majority delay, scaled by the surviving followers. Only
  // evaluated behind LeaderAndMajorityUp, which guarantees the floor(C/2)
  // follower minimum the scaling needs.
  auto majority_delay_fn = [followers_up, C, tmb](const Marking& m) {
    return (C - 1.0) / static_cast<double>(m.tokens(followers_up)) * tmb;
  };
  const std::vector<double> tm_levels = majority_delay_levels(cfg);

  // Saturating failure log: the only reader is the >= lag_threshold gate, so
  // counting past the threshold would only blow up the state space.
  const TokenCount counter_cap = cfg.lag_threshold();
  const TokenOp log_failure =
      set_value(counter, [counter, counter_cap](const Marking& m) {
        TokenCount v = m.tokens(counter);
        return v >= counter_cap ? v : v + 1;
      });

  PlaceId down_hw = 0, down_process = 0, down_bundle = 0;
  const bool node_dynamics =
      feat.injection_structure || feat.long_term || feat.recovery;
  if (node_dynamics) {
    down_hw = b.add_place("NodesDownHw", 0);
    down_process = b.add_place("NodesDownProcess", 0);
    down_bundle = b.add_place("NodesDownBundle", 0);
  }

  if (feat.event_structure) {
    const PlaceId idle = b.add_place("IdleState", feat.event_token ? 1 : 0);
    const PlaceId queued = b.add_place("EventQueuedForLeader", 0);
    const PlaceId at_leader = b.add_place("LeaderHasEvent", 0);
    const PlaceId maj_received = b.add_place("MajorityReceived", 0);
    const PlaceId commit_done = b.add_place("CommitDone", 0);
    const PlaceId commit_applied = b.add_place("CommitApplied", 0);
    const PlaceId app_done = b.add_place("ApplicationDone", 0);
    const PlaceId at_replica = b.add_place("ResponseAtReplica", 0);
    const PlaceId seq_end = b.add_place("SequenceEnd", 0);
    const PlaceId lagging = b.add_place("BringFollowersUpToDate", 0);

    const GateId g_down = b.add_gate(
        "ClusterImpaired", [leader_up, followers_up, maj_followers](const Marking& m) {
          return m.tokens(leader_up) < 1 || m.tokens(followers_up) < maj_followers;
        });
    const GateId g_no_sync = b.add_gate(
        "DisableConcurrentUpdates",
        [maj_received, commit_done, commit_applied](const Marking& m) {
          return m.tokens(maj_received) + m.tokens(commit_done) +
                     m.tokens(commit_applied) ==
                 0;
        });
    const unsigned lag_threshold = cfg.lag_threshold();
    const GateId g_lagging =
        b.add_gate("LaggingMajority", [counter, lag_threshold](const Marking& m) {
          return m.tokens(counter) >= lag_threshold;
        });

    add_det("clientToReplica", SanModelBuilder::constant(cfg.t_cr_ms), {cfg.t_cr_ms},
            {{idle, 1}}, {}, one({add_tokens(queued)}), kPrioEventPath);
    add_det("delayToLeader", SanModelBuilder::constant(cfg.t_r_ms), {cfg.t_r_ms},
            {{queued, 1}}, {g_up}, one({add_tokens(at_leader)}), kPrioEventPath);

    // Once enough replicas have been logged as failed, the follower majority
    // necessarily contains lagging members that must be reconciled before
    // the update can be distributed.
    b.add_instantaneous("majorFollowerNotUpToDate", {{at_leader, 1}}, {g_lagging},
                        one({add_tokens(lagging)}), kPrioLagDivert);
    if (cfg.r_m == 0) {
      b.add_instantaneous("lateBringUpToDateNodes", {{lagging, 1}}, {g_up},
                          one({add_tokens(at_leader), set_zero(counter)}),
                          kPrioLagReconcile);
    } else {
      const double rm = static_cast<double>(cfg.r_m);
      std::vector<double> lag_levels;
      for (double base : tm_levels) lag_levels.push_back(2.0 * rm * base);
      auto lag_delay = [majority_delay_fn, rm](const Marking& m) {
        return 2.0 * rm * majority_delay_fn(m);
      };
      add_det("lateBringUpToDateNodes", lag_delay, lag_levels, {{lagging, 1}}, {g_up},
              one({add_tokens(at_leader), set_zero(counter)}), kPrioLagReconcile);
    }

    add_det("delayToMajorityFollowers", majority_delay_fn, tm_levels, {{at_leader, 1}},
            {g_up, g_no_sync}, one({add_tokens(maj_received)}), kPrioEventPath);
    add_det("delayFromMajorityToLeader", majority_delay_fn, tm_levels,
            {{maj_received, 1}}, {g_up}, one({add_tokens(commit_done)}),
            kPrioEventPath);
    add_det("applyCommit", SanModelBuilder::constant(cfg.t_c_ms), {cfg.t_c_ms},
            {{commit_done, 1}}, {g_up}, one({add_tokens(commit_applied)}),
            kPrioEventPath);
    add_exp("applicationDelay", SanModelBuilder::constant(1.0 / cfg.t_a_ms),
            cfg.t_a_ms, {{commit_applied, 1}}, {g_up}, one({add_tokens(app_done)}),
            kPrioEventPath);
    add_det("responseToReplica", SanModelBuilder::constant(cfg.t_r_ms), {cfg.t_r_ms},
            {{app_done, 1}}, {g_up}, one({add_tokens(at_replica)}), kPrioEventPath);
    add_det("replicaToClient", SanModelBuilder::constant(cfg.t_cr_ms), {cfg.t_cr_ms},
            {{at_replica, 1}}, {g_up}, one({add_tokens(seq_end)}), kPrioEventPath);

    // Leader or majority failure mid-processing: the client times out and the
    // event re-queues for the (re-established) leader.
    const std::pair<PlaceId, const char*> interruptible[] = {
        {at_leader, "CH_LeaderHasEvent"},
        {maj_received, "CH_MajorityReceived"},
        {commit_done, "CH_CommitDone"},
        {commit_applied, "CH_CommitApplied"},
        {app_done, "CH_ApplicationDone"},
        {at_replica, "CH_ResponseAtReplica"},
        {lagging, "CH_BringFollowersUpToDate"},
    };
    for (const auto& [place, ch_name] : interruptible) {
      add_det(ch_name, SanModelBuilder::constant(cfg.t_cl_ms), {cfg.t_cl_ms},
              {{place, 1}}, {g_down}, one({add_tokens(queued)}), kPrioEventPath);
    }
  }

  PlaceId select_role = 0;
  if (feat.injection_structure || feat.long_term) {
    select_role = b.add_place("NodeDownSelectFailure", 0);

    // Role split evaluated on the counters as they were before the failure.
    auto p_safe = [C, followers_up, leader_up](const Marking& m) {
      return failure_role_probabilities(C, m.tokens(followers_up), m.tokens(leader_up))
          .safe_follower;
    };
    auto p_leader = [C, followers_up, leader_up](const Marking& m) {
      return failure_role_probabilities(C, m.tokens(followers_up), m.tokens(leader_up))
          .leader;
    };
    // The paper's majority-failure case does not say which role slot empties;
    // the failed node is chosen uniformly over the up nodes, consistent with
    // the healthy-region formulas.
    auto p_majority_follower = [C, followers_up, leader_up](const Marking& m) {
      double pm =
          failure_role_probabilities(C, m.tokens(followers_up), m.tokens(leader_up))
              .majority;
      if (pm == 0.0) return 0.0;
      double f = m.tokens(followers_up);
      double l = m.tokens(leader_up);
      return pm * (f / (f + l));
    };
    auto p_majority_leader = [C, followers_up, leader_up](const Marking& m) {
      double pm =
          failure_role_probabilities(C, m.tokens(followers_up), m.tokens(leader_up))
              .majority;
      if (pm == 0.0) return 0.0;
      double f = m.tokens(followers_up);
      double l = m.tokens(leader_up);
      return pm * (l / (f + l));
    };

    std::vector<Case> role_cases(4);
    role_cases[0].probability = p_safe;
    role_cases[0].ops = {remove_tokens(followers_up), log_failure};
    role_cases[1].probability = p_majority_follower;
    role_cases[1].ops = {remove_tokens(followers_up), log_failure};
    role_cases[2].probability = p_majority_leader;
    role_cases[2].ops = {remove_tokens(leader_up), log_failure};
    role_cases[3].probability = p_leader;
    role_cases[3].ops = {remove_tokens(leader_up), log_failure};
    b.add_instantaneous("failureSelectRole", {{select_role, 1}}, {},
                        std::move(role_cases), kPrioClassify);
  }

  if (feat.long_term) {
    struct LongTermSpec {
      const char* name;
      double rate_per_ms;
      PlaceId down_place;
    };
    const LongTermSpec long_term[] = {
        {"Hw_F", merged_failure_rate(cfg.lambda_f_h_per_ms(), cfg.lambda_d_per_ms()),
         down_hw},
        {"Process_F", cfg.lambda_f_s_per_ms(), down_process},
        {"Bundle_F", cfg.lambda_f_s_per_ms(), down_bundle},
    };
    for (const auto& spec : long_term) {
      if (spec.rate_per_ms <= 0.0) continue;
      double lam = spec.rate_per_ms;
      PlaceId down = spec.down_place;
      add_exp(
          spec.name,
          [nodes_up, lam](const Marking& m) { return m.tokens(nodes_up) * lam; },
          1.0 / lam, {{nodes_up, 1}}, {},
          one({add_tokens(down), add_tokens(select_role)}), kPrioEventPath);
    }
  }

  if (feat.injection_structure) {
    const PlaceId bursty =
        b.add_place("BurstyFailureTokens", feat.injection_tokens ? cfg.n_f : 0);
    const double p_hw = cfg.inject_mix == InjectionMix::Mixed ? 1.0 / 3.0 : 0.0;
    const double p_process = p_hw;
    const double p_bundle = 1.0 - p_hw - p_process;

    std::vector<Case> mix_cases(3);
    mix_cases[0].probability = SanModelBuilder::constant(p_hw);
    mix_cases[0].ops = {add_tokens(down_hw), add_tokens(select_role)};
    mix_cases[1].probability = SanModelBuilder::constant(p_process);
    mix_cases[1].ops = {add_tokens(down_process), add_tokens(select_role)};
    mix_cases[2].probability = SanModelBuilder::constant(p_bundle);
    mix_cases[2].ops = {add_tokens(down_bundle), add_tokens(select_role)};
    add_exp("selectFailureType",
            SanModelBuilder::constant(cfg.injection_rate_per_ms()),
            1.0 / cfg.injection_rate_per_ms(), {{bursty, 1}, {nodes_up, 1}}, {},
            std::move(mix_cases), kPrioEventPath);
  }

  if (feat.recovery) {
    const PlaceId pool = b.add_place("InitElectionPool", 0);
    const PlaceId candidate = b.add_place("AnnounceCandidateRole", 0);
    const PlaceId announce_follower = b.add_place("AnnounceFollowerRole", 0);

    const GateId g_no_leader = b.add_gate(
        "NoLeader", [leader_up](const Marking& m) { return m.tokens(leader_up) == 0; });
    const GateId g_leader = b.add_gate("LeaderPresent", [leader_up](const Marking& m) {
      return m.tokens(leader_up) >= 1;
    });
    auto live_nodes = [down_hw, down_process, down_bundle, C](const Marking& m) {
      return static_cast<long>(C) - static_cast<long>(m.tokens(down_hw)) -
             static_cast<long>(m.tokens(down_process)) -
             static_cast<long>(m.tokens(down_bundle));
    };
    const GateId g_quorum =
        b.add_gate("QuorumReachable", [live_nodes, maj_nodes](const Marking& m) {
          return live_nodes(m) >= static_cast<long>(maj_nodes);
        });
    const GateId g_no_quorum =
        b.add_gate("QuorumLost", [live_nodes, maj_nodes](const Marking& m) {
          return live_nodes(m) < static_cast<long>(maj_nodes);
        });

    struct RepairSpec {
      const char* name;
      double rate_per_ms;
      PlaceId down_place;
    };
    const RepairSpec repairs[] = {
        {"repairHw", cfg.lambda_r_h_per_ms(), down_hw},
        {"repairProcess",
         cfg.watchdog ? cfg.lambda_r_spw_per_ms() : cfg.lambda_r_s_per_ms(),
         down_process},
        {"repairBundle",
         cfg.watchdog ? cfg.lambda_r_sbw_per_ms_value() : cfg.lambda_r_s_per_ms(),
         down_bundle},
    };
    for (const auto& spec : repairs) {
      if (spec.rate_per_ms <= 0.0) continue;
      double lam = spec.rate_per_ms;
      PlaceId down = spec.down_place;
      add_exp(
          spec.name, [down, lam](const Marking& m) { return m.tokens(down) * lam; },
          1.0 / lam, {{down, 1}}, {}, one({add_tokens(pool)}), kPrioRepair);
    }

    // A rejoining replica waits out its follower timeout: it announces the
    // follower role if a leader heartbeat reached it, else it stands as a
    // candidate.
    const double lambda_f = 1.0 / cfg.mean_follower_timeout_ms;
    {
      std::vector<Case> cases(2);
      cases[0].probability = [leader_up](const Marking& m) {
        return m.tokens(leader_up) >= 1 ? 1.0 : 0.0;
      };
      cases[0].ops = {add_tokens(announce_follower)};
      cases[1].probability = [leader_up](const Marking& m) {
        return m.tokens(leader_up) >= 1 ? 0.0 : 1.0;
      };
      cases[1].ops = {add_tokens(candidate)};
      add_exp(
          "electionTimeout",
          [pool, lambda_f](const Marking& m) { return m.tokens(pool) * lambda_f; },
          cfg.mean_follower_timeout_ms, {{pool, 1}}, {}, std::move(cases),
          kPrioPoolTimeout);
    }

    b.add_instantaneous("admitFollower", {{announce_follower, 1}}, {},
                        one({add_tokens(followers_up), add_tokens(nodes_up)}),
                        kPrioAdmitFollower);

    // Admitted followers notice a missing leader and switch to candidacy.
    add_exp(
        "followerElectionTimeout",
        [followers_up, lambda_f](const Marking& m) {
          return m.tokens(followers_up) * lambda_f;
        },
        cfg.mean_follower_timeout_ms, {{followers_up, 1}, {nodes_up, 1}},
        {g_no_leader}, one({add_tokens(candidate)}), kPrioFollowerTimeout);

    // Vote collection takes one round trip to the farthest member of the
    // reachable majority ("setLeaderUp").
    std::vector<double> win_levels;
    for (unsigned peers = maj_followers; peers <= C - 1; ++peers) {
      win_levels.push_back(2.0 * ((C - 1.0) / static_cast<double>(peers)) * tmb);
    }
    auto win_delay = [live_nodes, C, tmb](const Marking& m) {
      return 2.0 * ((C - 1.0) / static_cast<double>(live_nodes(m) - 1)) * tmb;
    };
    add_det("winElection", win_delay, win_levels, {{candidate, 1}},
            {g_no_leader, g_quorum}, one({add_tokens(leader_up), add_tokens(nodes_up)}),
            kPrioWinElection);

    // A candidate that hears an established leader falls back to the
    // follower role ("setNewFollowerUp").
    add_det("discoverLeader", SanModelBuilder::constant(cfg.t_r_ms), {cfg.t_r_ms},
            {{candidate, 1}}, {g_leader}, one({add_tokens(announce_follower)}),
            kPrioDiscoverLeader);

    // Without a reachable quorum the candidate just restarts its procedure.
    // The firing changes nothing, so under the availability cutoff it is
    // omitted rather than turned into an instantaneous cycle.
    if (!feat.fast_cutoff) {
      const double lambda_ca = 1.0 / cfg.mean_candidate_timeout_ms;
      b.add_exponential(
          "candidateTimeout",
          [candidate, lambda_ca](const Marking& m) {
            return m.tokens(candidate) * lambda_ca;
          },
          {{candidate, 1}}, {g_no_quorum}, one({add_tokens(candidate)}));
    }
  }

  return std::move(b).build();
}

}  // namespace

void validate_config(const ClusterConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.c < 3) fail("C must be >= 3");
  if (cfg.c % 2 == 0) fail("C must be odd (C = 2F+1)");
  if (cfg.n_f > cfg.c) fail("N_F must be <= C");
  if (cfg.e_s < 1) fail("E_S must be >= 1");

  const std::pair<const char*, double> times[] = {
      {"T_A_ms", cfg.t_a_ms},
      {"T_C_ms", cfg.t_c_ms},
      {"T_CL_ms", cfg.t_cl_ms},
      {"T_R_ms", cfg.t_r_ms},
      {"T_M_best_ms", cfg.t_m_best_ms},
      {"T_CR_ms", cfg.t_cr_ms},
      {"mean_follower_timeout_ms", cfg.mean_follower_timeout_ms},
      {"mean_candidate_timeout_ms", cfg.mean_candidate_timeout_ms},
  };
  for (const auto& [key, value] : times) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      fail(std::string(key) + " must be > 0");
    }
  }
  if (std::abs(cfg.t_r_ms - 2.0 * cfg.t_m_best_ms) > 1e-9 * cfg.t_r_ms) {
    fail("T_R_ms must equal 2*T_M_best_ms (worst-case replica-leader delay)");
  }

  const std::pair<const char*, double> rates[] = {
      {"lambda_F_H_per_month", cfg.lambda_f_h_per_month},
      {"lambda_F_S_per_week", cfg.lambda_f_s_per_week},
      {"lambda_d_per_hour", cfg.lambda_d_per_hour},
      {"lambda_R_H_per_hour", cfg.lambda_r_h_per_hour},
      {"lambda_R_S_per_minute", cfg.lambda_r_s_per_minute},
      {"lambda_R_Sbw_per_ms", cfg.lambda_r_sbw_per_ms},
      {"lambda_R_Spw_per_s", cfg.lambda_r_spw_per_s},
  };
  for (const auto& [key, value] : rates) {
    if (value < 0.0 || !std::isfinite(value)) {
      fail(std::string(key) + " must be >= 0");
    }
  }
  if (cfg.lambda_f_si_per_ms &&
      (*cfg.lambda_f_si_per_ms < 0.0 || !std::isfinite(*cfg.lambda_f_si_per_ms))) {
    fail("lambda_F_Si_per_ms must be >= 0");
  }
  if (cfg.availability_fast_cutoff_ms < 0.0) {
    fail("availability_fast_cutoff_ms must be >= 0");
  }
}

ClusterConfig table2_preset() { return ClusterConfig{}; }

std::optional<double> majority_delay(const ClusterConfig& cfg, unsigned f_up) {
  if (f_up > cfg.c - 1) {
    throw ConfigError("majority_delay: f_up exceeds C-1");
  }
  if (f_up < cfg.majority_followers()) return std::nullopt;
  return (cfg.c - 1.0) / static_cast<double>(f_up) * cfg.t_m_best_ms;
}

RoleProbabilities failure_role_probabilities(unsigned c, unsigned f_up, unsigned l_up) {
  if (l_up > 1) throw ConfigError("failure_role_probabilities: L_up must be 0 or 1");
  if (c < 1 || f_up > c - 1) {
    throw ConfigError("failure_role_probabilities: f_up out of range");
  }
  // ceil((C-1)/2 + 1) == floor(C/2) + 1 for any C.
  const unsigned threshold = c / 2 + 1;
  RoleProbabilities r;
  if (f_up >= threshold && l_up > 0) {
    r.leader = 1.0 / (static_cast<double>(f_up) + 1.0);
    r.safe_follower = 1.0 - r.leader;  // exact complement, sums to exactly 1
    r.majority = 0.0;
  } else {
    r.majority = 1.0;
  }
  return r;
}

double merged_failure_rate(double lambda_c, double lambda_d) {
  if (lambda_c < 0.0 || lambda_d < 0.0) {
    throw ConfigError("merged_failure_rate: rates must be >= 0");
  }
  return lambda_c + lambda_d;
}

SanModel build_response_time_model(const ClusterConfig& cfg) {
  Features f;
  f.event_structure = true;
  f.event_token = true;
  return build_raft_san(cfg, f, "raft-response-time");
}

SanModel build_failure_model(const ClusterConfig& cfg) {
  Features f;
  f.injection_structure = cfg.n_f >= 1 && cfg.injection_rate_per_ms() > 0.0;
  f.injection_tokens = true;
  f.long_term = true;
  return build_raft_san(cfg, f, "raft-failure");
}

SanModel build_recovery_model(const ClusterConfig& cfg) {
  Features f;
  f.recovery = true;
  return build_raft_san(cfg, f, "raft-recovery");
}

SanModel compose(const ClusterConfig& cfg) {
  Features f;
  f.event_structure = true;
  f.injection_structure = cfg.n_f >= 1 && cfg.injection_rate_per_ms() > 0.0;
  f.recovery = true;
  if (cfg.mode == AnalysisMode::Response) {
    f.event_token = true;
    f.injection_tokens = true;
  } else {
    f.long_term = true;
    f.fast_cutoff = cfg.availability_fast_cutoff_ms > 0.0;
  }
  return build_raft_san(cfg, f,
                        cfg.mode == AnalysisMode::Response
                            ? "raft-composed-response"
                            : "raft-composed-availability");
}

RewardVariable event_completed_reward(const SanModel& model) {
  auto seq_end = model.find_place("SequenceEnd");
  if (!seq_end) throw ModelError("model has no SequenceEnd place");
  PlaceId p = *seq_end;
  return RewardVariable{"event_completed", [p](const Marking& m) {
                          return m.tokens(p) >= 1 ? 1.0 : 0.0;
                        }};
}

RewardVariable cluster_available_reward(const SanModel& model,
                                        const ClusterConfig& cfg) {
  auto leader = model.find_place("LeaderUp");
  auto followers = model.find_place("FollowersUp");
  if (!leader || !followers) {
    throw ModelError("model lacks LeaderUp/FollowersUp places");
  }
  PlaceId l = *leader, f = *followers;
  unsigned need = cfg.majority_followers();
  return RewardVariable{"cluster_available", [l, f, need](const Marking& m) {
                          return m.tokens(l) >= 1 && m.tokens(f) >= need ? 1.0 : 0.0;
                        }};
}

std::vector<std::pair<double, double>> response_time_cdf(
    const ClusterConfig& cfg, const std::vector<double>& times_ms,
    const ExplorationLimits& limits, const SolverSettings& settings) {
  ClusterConfig c = cfg;
  c.mode = AnalysisMode::Response;
  SanModel model = expand_erlang(compose(c), c.e_s);
  Ctmc chain = generate(model, limits);
  auto values =
      reward_sweep(chain, times_ms, {event_completed_reward(model)}, settings);
  std::vector<std::pair<double, double>> out;
  out.reserve(times_ms.size());
  for (std::size_t i = 0; i < times_ms.size(); ++i) {
    out.emplace_back(times_ms[i], values[0][i]);
  }
  return out;
}

std::vector<std::pair<double, double>> unavailability_curve(
    const ClusterConfig& cfg, const std::vector<double>& times_ms,
    const ExplorationLimits& limits, const SolverSettings& settings) {
  ClusterConfig c = cfg;
  c.mode = AnalysisMode::Availability;
  SanModel model = expand_erlang(compose(c), c.e_s);
  Ctmc chain = generate(model, limits);
  auto values =
      reward_sweep(chain, times_ms, {cluster_available_reward(model, c)}, settings);
  std::vector<std::pair<double, double>> out;
  out.reserve(times_ms.size());
  for (std::size_t i = 0; i < times_ms.size(); ++i) {
    out.emplace_back(times_ms[i], 1.0 - values[0][i]);
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t z = s.find_last_not_of(" \t\r\n");
  return s.substr(a, z - a + 1);
}

double parse_double(const std::string& v, int line) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  return out;
}

unsigned parse_unsigned(const std::string& v, int line) {
  unsigned out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("line " + std::to_string(line) + ": bad count '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": bad flag '" + v + "'");
}

}  // namespace

ClusterConfig parse_cluster_config(std::istream& in) {
  ClusterConfig cfg = table2_preset();
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value");
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value");
    }

    if (key == "C") cfg.c = parse_unsigned(value, line);
    else if (key == "N_F") cfg.n_f = parse_unsigned(value, line);
    else if (key == "E_S") cfg.e_s = parse_unsigned(value, line);
    else if (key == "R_M") cfg.r_m = parse_unsigned(value, line);
    else if (key == "watchdog") cfg.watchdog = parse_bool(value, line);
    else if (key == "mode") {
      if (value == "response") cfg.mode = AnalysisMode::Response;
      else if (value == "availability") cfg.mode = AnalysisMode::Availability;
      else throw ConfigError("line " + std::to_string(line) +
                             ": mode must be response|availability");
    } else if (key == "inject_mix") {
      if (value == "mixed") cfg.inject_mix = InjectionMix::Mixed;
      else if (value == "bundle") cfg.inject_mix = InjectionMix::BundleOnly;
      else throw ConfigError("line " + std::to_string(line) +
                             ": inject_mix must be mixed|bundle");
    }
    else if (key == "T_A_ms") cfg.t_a_ms = parse_double(value, line);
    else if (key == "T_C_ms") cfg.t_c_ms = parse_double(value, line);
    else if (key == "T_CL_ms") cfg.t_cl_ms = parse_double(value, line);
    else if (key == "T_R_ms") cfg.t_r_ms = parse_double(value, line);
    else if (key == "T_M_best_ms") cfg.t_m_best_ms = parse_double(value, line);
    else if (key == "T_CR_ms") cfg.t_cr_ms = parse_double(value, line);
    else if (key == "mean_follower_timeout_ms")
      cfg.mean_follower_timeout_ms = parse_double(value, line);
    else if (key == "mean_candidate_timeout_ms")
      cfg.mean_candidate_timeout_ms = parse_double(value, line);
    else if (key == "lambda_F_H_per_month")
      cfg.lambda_f_h_per_month = parse_double(value, line);
    else if (key == "lambda_F_S_per_week")
      cfg.lambda_f_s_per_week = parse_double(value, line);
    else if (key == "lambda_F_Si_per_ms")
      cfg.lambda_f_si_per_ms = parse_double(value, line);
    else if (key == "lambda_d_per_hour")
      cfg.lambda_d_per_hour = parse_double(value, line);
    else if (key == "lambda_R_H_per_hour")
      cfg.lambda_r_h_per_hour = parse_double(value, line);
    else if (key == "lambda_R_S_per_minute")
      cfg.lambda_r_s_per_minute = parse_double(value, line);
    else if (key == "lambda_R_Sbw_per_ms")
      cfg.lambda_r_sbw_per_ms = parse_double(value, line);
    else if (key == "lambda_R_Spw_per_s")
      cfg.lambda_r_spw_per_s = parse_double(value, line);
    else if (key == "availability_fast_cutoff_ms")
      cfg.availability_fast_cutoff_ms = parse_double(value, line);
    else {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key +
                        "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

ClusterConfig load_cluster_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_cluster_config(in);
}

std::vector<std::pair<std::string, std::string>> config_metadata(
    const ClusterConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("C", std::to_string(cfg.c));
  kv.emplace_back("N_F", std::to_string(cfg.n_f));
  kv.emplace_back("E_S", std::to_string(cfg.e_s));
  kv.emplace_back("R_M", std::to_string(cfg.r_m));
  kv.emplace_back("watchdog", cfg.watchdog ? "true" : "false");
  kv.emplace_back("mode",
                  cfg.mode == AnalysisMode::Response ? "response" : "availability");
  kv.emplace_back("inject_mix",
                  cfg.inject_mix == InjectionMix::Mixed ? "mixed" : "bundle");
  kv.emplace_back("T_A_ms", format_exact(cfg.t_a_ms));
  kv.emplace_back("T_C_ms", format_exact(cfg.t_c_ms));
  kv.emplace_back("T_CL_ms", format_exact(cfg.t_cl_ms));
  kv.emplace_back("T_R_ms", format_exact(cfg.t_r_ms));
  kv.emplace_back("T_M_best_ms", format_exact(cfg.t_m_best_ms));
  kv.emplace_back("T_CR_ms", format_exact(cfg.t_cr_ms));
  kv.emplace_back("mean_follower_timeout_ms",
                  format_exact(cfg.mean_follower_timeout_ms));
  kv.emplace_back("mean_candidate_timeout_ms",
                  format_exact(cfg.mean_candidate_timeout_ms));
  kv.emplace_back("lambda_F_H_per_month", format_exact(cfg.lambda_f_h_per_month));
  kv.emplace_back("lambda_F_S_per_week", format_exact(cfg.lambda_f_s_per_week));
  kv.emplace_back("lambda_F_Si_per_ms", format_exact(cfg.injection_rate_per_ms()));
  kv.emplace_back("lambda_d_per_hour", format_exact(cfg.lambda_d_per_hour));
  kv.emplace_back("lambda_R_H_per_hour", format_exact(cfg.lambda_r_h_per_hour));
  kv.emplace_back("lambda_R_S_per_minute", format_exact(cfg.lambda_r_s_per_minute));
  kv.emplace_back("lambda_R_Sbw_per_ms", format_exact(cfg.lambda_r_sbw_per_ms));
  kv.emplace_back("lambda_R_Spw_per_s", format_exact(cfg.lambda_r_spw_per_s));
  kv.emplace_back("availability_fast_cutoff_ms",
                  format_exact(cfg.availability_fast_cutoff_ms));
  return kv;
}

}  // namespace sanperf::raft
