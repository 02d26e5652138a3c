#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sanperf/raft.hpp"

using namespace sanperf;
using namespace sanperf::raft;

namespace {

std::vector<TokenCount> blank_marking(const SanModel& m) {
  return m.initial_marking().raw();
}

TokenCount at(const SanModel& m, const Marking& mk, const char* place) {
  return mk.tokens(*m.find_place(place));
}

}  // namespace

TEST_CASE("majority_delay: scaling and the undefined branch") {
  ClusterConfig cfg;
  cfg.c = 5;
  CHECK(*majority_delay(cfg, 4) == doctest::Approx(5.0));
  CHECK(*majority_delay(cfg, 2) == doctest::Approx(10.0));
  CHECK_FALSE(majority_delay(cfg, 1).has_value());
}

TEST_CASE("majority_delay: endpoints are exact") {
  for (unsigned c : {3u, 5u, 7u, 9u, 21u}) {
    ClusterConfig cfg;
    cfg.c = c;
    CHECK(*majority_delay(cfg, c - 1) == cfg.t_m_best_ms);
    CHECK(*majority_delay(cfg, c / 2) == 2.0 * cfg.t_m_best_ms);
  }
}

TEST_CASE("majority_delay is nonincreasing in the follower count") {
  ClusterConfig cfg;
  cfg.c = 9;
  double prev = 1e300;
  for (unsigned f = cfg.c / 2; f <= cfg.c - 1; ++f) {
    double d = *majority_delay(cfg, f);
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("failure_role_probabilities: healthy cluster splits by node count") {
  auto r = failure_role_probabilities(5, 4, 1);
  CHECK(r.safe_follower == doctest::Approx(4.0 / 5.0));
  CHECK(r.majority == 0.0);
  CHECK(r.leader == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("failure_role_probabilities: thin majority forces the majority case") {
  auto r = failure_role_probabilities(5, 2, 1);
  CHECK(r.safe_follower == 0.0);
  CHECK(r.majority == 1.0);
  CHECK(r.leader == 0.0);
}

TEST_CASE("failure_role_probabilities: leaderless cluster is always a majority failure") {
  for (unsigned f = 0; f <= 4; ++f) {
    auto r = failure_role_probabilities(5, f, 0);
    CHECK(r.majority == 1.0);
    CHECK(r.safe_follower == 0.0);
    CHECK(r.leader == 0.0);
  }
}

TEST_CASE("failure_role_probabilities: exhaustive unit sum for C=3..21") {
  for (unsigned c = 3; c <= 21; c += 2) {
    for (unsigned f = 0; f <= c - 1; ++f) {
      for (unsigned l = 0; l <= 1; ++l) {
        auto r = failure_role_probabilities(c, f, l);
        CHECK(r.safe_follower >= 0.0);
        CHECK(r.safe_follower <= 1.0);
        CHECK(r.majority >= 0.0);
        CHECK(r.majority <= 1.0);
        CHECK(r.leader >= 0.0);
        CHECK(r.leader <= 1.0);
        CHECK(r.safe_follower + r.majority + r.leader == 1.0);
      }
    }
  }
}

TEST_CASE("merged_failure_rate: superposition of independent arrivals") {
  CHECK(merged_failure_rate(2.5, 0.0) == 2.5);
  CHECK(merged_failure_rate(0.0, 0.0) == 0.0);
  // Two 1/week processes: inter-arrival mean 84 h.
  double per_week = 1.0;
  double merged = merged_failure_rate(per_week, per_week);
  CHECK(168.0 / merged == doctest::Approx(84.0));
  CHECK_THROWS_AS(merged_failure_rate(-1.0, 0.0), ConfigError);
}

TEST_CASE("config: defaults are the standard preset and parse round-trips") {
  ClusterConfig cfg = table2_preset();
  CHECK(cfg.c == 3);
  CHECK(cfg.e_s == 20);
  CHECK(cfg.r_m == 10);
  CHECK(cfg.t_m_best_ms == 5.0);
  CHECK(cfg.t_r_ms == 10.0);
  CHECK(cfg.mean_follower_timeout_ms == 225.0);
  CHECK(cfg.injection_rate_per_ms() == doctest::Approx(1.0 / 30.0));
  CHECK(cfg.lambda_r_sbw_per_ms == doctest::Approx(1.0 / 182.9));
  CHECK(cfg.lambda_r_spw_per_s == doctest::Approx(1.0 / 26.9));
  CHECK_FALSE(cfg.watchdog);

  // Echo -> parse -> echo is a fixed point.
  std::ostringstream echo;
  for (auto& [k, v] : config_metadata(cfg)) echo << k << '=' << v << '\n';
  std::istringstream in(echo.str());
  ClusterConfig reparsed = parse_cluster_config(in);
  std::ostringstream echo2;
  for (auto& [k, v] : config_metadata(reparsed)) echo2 << k << '=' << v << '\n';
  CHECK(echo.str() == echo2.str());
}

TEST_CASE("config: empty file yields the preset exactly") {
  std::istringstream in("");
  ClusterConfig cfg = parse_cluster_config(in);
  std::ostringstream a, b;
  for (auto& [k, v] : config_metadata(cfg)) a << k << '=' << v << '\n';
  for (auto& [k, v] : config_metadata(table2_preset())) b << k << '=' << v << '\n';
  CHECK(a.str() == b.str());
}

TEST_CASE("config: even C is a validation error") {
  std::istringstream in("C=4\n");
  CHECK_THROWS_WITH_AS(parse_cluster_config(in), "C must be odd (C = 2F+1)",
                       ConfigError);
}

TEST_CASE("config: overrides apply on top of the preset") {
  std::istringstream in("T_M_best_ms=5\nC=7\n");
  ClusterConfig cfg = parse_cluster_config(in);
  CHECK(cfg.c == 7);
  CHECK(cfg.t_m_best_ms == 5.0);
  CHECK(cfg.e_s == 20);
}

TEST_CASE("config: unknown keys and malformed lines carry line numbers") {
  {
    std::istringstream in("C=3\nbogus_key=1\n");
    try {
      parse_cluster_config(in);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  {
    std::istringstream in("C=3\nnot a pair\n");
    try {
      parse_cluster_config(in);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}

TEST_CASE("config: T_R must stay twice T_M_best") {
  std::istringstream in("T_R_ms=12\n");
  CHECK_THROWS_AS(parse_cluster_config(in), ConfigError);
  std::istringstream ok("T_R_ms=12\nT_M_best_ms=6\n");
  CHECK_NOTHROW(parse_cluster_config(ok));
}

TEST_CASE("config: N_F may be zero (failure-free) but not exceed C") {
  std::istringstream zero("N_F=0\n");
  CHECK_NOTHROW(parse_cluster_config(zero));
  std::istringstream too_many("N_F=4\n");
  CHECK_THROWS_AS(parse_cluster_config(too_many), ConfigError);
}

TEST_CASE("all submodels and the composition validate cleanly") {
  ClusterConfig cfg;
  cfg.n_f = 2;
  for (const SanModel& m :
       {build_response_time_model(cfg), build_failure_model(cfg),
        build_recovery_model(cfg), compose(cfg)}) {
    auto report = validate(m);
    for (const auto& f : report.findings) MESSAGE(f);
    CHECK(report.ok());
  }
  ClusterConfig avail = cfg;
  avail.mode = AnalysisMode::Availability;
  CHECK(validate(compose(avail)).ok());
}

TEST_CASE("failure model: burst pool starts with N_F tokens") {
  ClusterConfig cfg;
  cfg.n_f = 2;
  SanModel m = build_failure_model(cfg);
  CHECK(at(m, m.initial_marking(), "BurstyFailureTokens") == 2);
}

TEST_CASE("failure model: injection rate is N_F/30 per millisecond") {
  ClusterConfig cfg;
  cfg.c = 7;
  cfg.n_f = 3;
  SanModel m = build_failure_model(cfg);
  const Activity& inject = m.activity(*m.find_activity("selectFailureType"));
  double rate = std::get<ExponentialDist>(*inject.distribution).rate(m.initial_marking());
  CHECK(rate == doctest::Approx(0.1));
}

TEST_CASE("failure model: bundle-only study zeroes the other injection branches") {
  ClusterConfig cfg;
  cfg.n_f = 1;
  cfg.inject_mix = InjectionMix::BundleOnly;
  SanModel m = build_failure_model(cfg);
  auto probs = case_probabilities(m, m.initial_marking(),
                                  *m.find_activity("selectFailureType"));
  REQUIRE(probs.size() == 3);
  CHECK(probs[0] == 0.0);
  CHECK(probs[1] == 0.0);
  CHECK(probs[2] == 1.0);
}

TEST_CASE("role selection splits mass exactly like the formula triple") {
  ClusterConfig cfg;  // C=3
  cfg.n_f = 1;
  SanModel m = compose(cfg);

  auto classify = [&](TokenCount l, TokenCount f) {
    std::vector<TokenCount> toks = blank_marking(m);
    toks[*m.find_place("IdleState")] = 0;  // park the event out of the way
    toks[*m.find_place("LeaderUp")] = l;
    toks[*m.find_place("FollowersUp")] = f;
    toks[*m.find_place("NodesUp")] = l + f;  // post-consume bookkeeping
    toks[*m.find_place("NodesDownBundle")] = 1;
    toks[*m.find_place("BurstyFailureTokens")] = 0;
    toks[*m.find_place("NodeDownSelectFailure")] = 1;
    return resolve_tangible(m, Marking(toks));
  };

  // Healthy C=3: follower hit with 2/3, leader hit with 1/3.
  auto healthy = classify(1, 2);
  REQUIRE(healthy.size() == 2);
  for (const auto& [mk, w] : healthy) {
    if (at(m, mk, "LeaderUp") == 0) {
      CHECK(w == doctest::Approx(1.0 / 3.0));
      CHECK(at(m, mk, "FollowersUp") == 2);
    } else {
      CHECK(w == doctest::Approx(2.0 / 3.0));
      CHECK(at(m, mk, "FollowersUp") == 1);
    }
    CHECK(at(m, mk, "CounterFailures") == 1);
  }

  // Below the threshold the failed node is uniform over the two up nodes.
  auto thin = classify(1, 1);
  REQUIRE(thin.size() == 2);
  for (const auto& [mk, w] : thin) CHECK(w == doctest::Approx(0.5));

  // Leaderless: the failure must hit a follower.
  auto leaderless = classify(0, 2);
  REQUIRE(leaderless.size() == 1);
  CHECK(at(m, leaderless[0].first, "FollowersUp") == 1);
}

TEST_CASE("recovery: repair rates swap when the watchdog is enabled") {
  for (bool wd : {false, true}) {
    ClusterConfig cfg;
    cfg.watchdog = wd;
    SanModel m = build_recovery_model(cfg);
    std::vector<TokenCount> toks = blank_marking(m);
    toks[*m.find_place("NodesDownBundle")] = 1;
    toks[*m.find_place("NodesDownProcess")] = 1;
    Marking mk{toks};
    auto rate_of = [&](const char* name) {
      const Activity& a = m.activity(*m.find_activity(name));
      return std::get<ExponentialDist>(*a.distribution).rate(mk);
    };
    if (wd) {
      CHECK(rate_of("repairBundle") == doctest::Approx(1.0 / 182.9));
      CHECK(rate_of("repairProcess") == doctest::Approx(1.0 / 26900.0));
    } else {
      CHECK(rate_of("repairBundle") == doctest::Approx(1.0 / 180000.0));
      CHECK(rate_of("repairProcess") == doctest::Approx(1.0 / 180000.0));
    }
  }
}

TEST_CASE("recovery: candidate waits out a lost quorum and joins a found leader") {
  ClusterConfig cfg;  // C=3, quorum needs 2 live nodes
  SanModel m = build_recovery_model(cfg);

  std::vector<TokenCount> toks = blank_marking(m);
  toks[*m.find_place("LeaderUp")] = 0;
  toks[*m.find_place("FollowersUp")] = 0;
  toks[*m.find_place("NodesUp")] = 0;
  toks[*m.find_place("NodesDownHw")] = 2;
  toks[*m.find_place("AnnounceCandidateRole")] = 1;
  Marking majority_down{toks};
  CHECK_FALSE(is_enabled(m, majority_down, *m.find_activity("winElection")));
  CHECK(is_enabled(m, majority_down, *m.find_activity("candidateTimeout")));
  CHECK_FALSE(is_enabled(m, majority_down, *m.find_activity("discoverLeader")));

  toks[*m.find_place("NodesDownHw")] = 0;
  toks[*m.find_place("LeaderUp")] = 1;
  toks[*m.find_place("FollowersUp")] = 1;
  toks[*m.find_place("NodesUp")] = 2;
  Marking leader_back{toks};
  CHECK(is_enabled(m, leader_back, *m.find_activity("discoverLeader")));
  CHECK_FALSE(is_enabled(m, leader_back, *m.find_activity("winElection")));
  CHECK_FALSE(is_enabled(m, leader_back, *m.find_activity("candidateTimeout")));

  // Quorum back, still leaderless: the election round trip may run.
  toks[*m.find_place("LeaderUp")] = 0;
  toks[*m.find_place("FollowersUp")] = 1;
  toks[*m.find_place("NodesUp")] = 1;
  Marking quorum_no_leader{toks};
  CHECK(is_enabled(m, quorum_no_leader, *m.find_activity("winElection")));
}

TEST_CASE("recovery: rejoining node becomes follower iff a leader exists") {
  ClusterConfig cfg;
  SanModel m = build_recovery_model(cfg);
  ActivityId timeout = *m.find_activity("electionTimeout");

  std::vector<TokenCount> toks = blank_marking(m);
  toks[*m.find_place("InitElectionPool")] = 1;
  auto with_leader = case_probabilities(m, Marking(toks), timeout);
  CHECK(with_leader[0] == 1.0);  // announce follower role
  CHECK(with_leader[1] == 0.0);

  toks[*m.find_place("LeaderUp")] = 0;
  auto leaderless = case_probabilities(m, Marking(toks), timeout);
  CHECK(leaderless[0] == 0.0);
  CHECK(leaderless[1] == 1.0);  // stand as candidate
}

TEST_CASE("lagging majority diverts the update into reconciliation") {
  ClusterConfig cfg;  // C=3, threshold floor((C-1)/2)+1 = 2
  cfg.n_f = 2;
  SanModel m = compose(cfg);

  std::vector<TokenCount> toks = blank_marking(m);
  toks[*m.find_place("IdleState")] = 0;
  toks[*m.find_place("LeaderHasEvent")] = 1;
  toks[*m.find_place("CounterFailures")] = 2;
  toks[*m.find_place("BurstyFailureTokens")] = 0;
  auto resolved = resolve_tangible(m, Marking(toks));
  REQUIRE(resolved.size() == 1);
  CHECK(at(m, resolved[0].first, "BringFollowersUpToDate") == 1);
  CHECK(at(m, resolved[0].first, "LeaderHasEvent") == 0);

  // Reconciliation pacing: one round trip per missing term, both ways.
  const Activity& late = m.activity(*m.find_activity("lateBringUpToDateNodes"));
  const auto& dist = std::get<DeterministicDist>(*late.distribution);
  CHECK(dist.delay(resolved[0].first) ==
        doctest::Approx(2.0 * cfg.r_m * 5.0));  // all followers up: T_M = 5 ms

  // Below the threshold the update flows straight through.
  toks[*m.find_place("CounterFailures")] = 1;
  auto untouched = resolve_tangible(m, Marking(toks));
  REQUIRE(untouched.size() == 1);
  CHECK(at(m, untouched[0].first, "LeaderHasEvent") == 1);
}

TEST_CASE("response mode: SequenceEnd is absorbing for the event token") {
  ClusterConfig cfg;
  cfg.n_f = 1;
  cfg.e_s = 1;
  SanModel m = expand_erlang(compose(cfg), 1);
  Ctmc c = generate(m);
  PlaceId seq_end = *m.find_place("SequenceEnd");

  std::vector<bool> done(c.state_count());
  for (std::uint32_t s = 0; s < c.state_count(); ++s) {
    done[s] = c.state(s).tokens(seq_end) >= 1;
  }
  bool any_done = false;
  for (bool d : done) any_done |= d;
  CHECK(any_done);
  for (const auto& t : c.transitions()) {
    if (done[t.from]) CHECK(done[t.to]);
  }
}

TEST_CASE("availability mode: event places stay empty in every reachable marking") {
  ClusterConfig cfg;
  cfg.mode = AnalysisMode::Availability;
  SanModel m = expand_erlang(compose(cfg), cfg.e_s);
  Ctmc c = generate(m);
  const char* event_places[] = {"IdleState",      "EventQueuedForLeader",
                                "LeaderHasEvent", "MajorityReceived",
                                "CommitDone",     "CommitApplied",
                                "ApplicationDone", "ResponseAtReplica",
                                "SequenceEnd",    "BringFollowersUpToDate"};
  for (std::uint32_t s = 0; s < c.state_count(); ++s) {
    Marking mk = c.state(s);
    for (const char* p : event_places) CHECK(at(m, mk, p) == 0);
  }
}

TEST_CASE("zero-failure composition equals the bare delay chain") {
  ClusterConfig cfg;
  cfg.n_f = 0;
  cfg.e_s = 5;

  std::vector<double> times;
  for (int i = 0; i <= 120; ++i) times.push_back(i);
  auto composed = response_time_cdf(cfg, times);

  // The same eight-hop pipeline built directly, nothing else around it.
  SanModelBuilder b("bare-chain");
  PlaceId stage[9];
  const char* names[9] = {"s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "SequenceEnd"};
  for (int i = 0; i < 9; ++i) stage[i] = b.add_place(names[i], i == 0 ? 1 : 0);
  const double delays[] = {1.0, 10.0, 5.0, 5.0, 1.0};
  const char* dnames[] = {"cr", "rl", "lm", "ml", "commit"};
  for (int i = 0; i < 5; ++i) {
    b.add_deterministic(dnames[i], SanModelBuilder::constant(delays[i]), {delays[i]},
                        {{stage[i], 1}}, {},
                        SanModelBuilder::single_case({add_tokens(stage[i + 1])}));
  }
  b.add_exponential("app", SanModelBuilder::constant(1.0), {{stage[5], 1}}, {},
                    SanModelBuilder::single_case({add_tokens(stage[6])}));
  b.add_deterministic("resp_rl", SanModelBuilder::constant(10.0), {10.0},
                      {{stage[6], 1}}, {},
                      SanModelBuilder::single_case({add_tokens(stage[7])}));
  b.add_deterministic("resp_cr", SanModelBuilder::constant(1.0), {1.0},
                      {{stage[7], 1}}, {},
                      SanModelBuilder::single_case({add_tokens(stage[8])}));
  Ctmc bare = generate(expand_erlang(std::move(b).build(), 5));
  RewardVariable done{"done", [](const Marking& mk) {
                        return mk.tokens(8) >= 1 ? 1.0 : 0.0;
                      }};
  auto bare_cdf = reward_sweep(bare, times, {done});

  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::abs(composed[i].second - bare_cdf[0][i]) <= 1e-9);
  }
}

TEST_CASE("response_time_cdf starts at zero, never decreases, stays below one") {
  ClusterConfig cfg;
  cfg.n_f = 1;
  cfg.e_s = 2;
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(5.0 * i);
  auto cdf = response_time_cdf(cfg, times);
  CHECK(cdf[0].second <= 1e-12);
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    CHECK(cdf[i].second >= cdf[i - 1].second - 1e-9);
    CHECK(cdf[i].second <= 1.0 + 1e-9);
  }
}

TEST_CASE("larger clusters dominate smaller ones under a single mixed failure") {
  std::vector<double> times;
  for (int i = 0; i <= 50; ++i) times.push_back(20.0 * i);
  auto cdf_for = [&](unsigned c) {
    ClusterConfig cfg;
    cfg.c = c;
    cfg.n_f = 1;
    cfg.e_s = 2;
    return response_time_cdf(cfg, times);
  };
  auto p3 = cdf_for(3);
  auto p5 = cdf_for(5);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(p5[i].second >= p3[i].second - 1e-6);
  }
}

TEST_CASE("unavailability starts at zero and the watchdog never hurts") {
  std::vector<double> times;
  for (double h : {0.0, 1.0, 10.0, 100.0, 500.0, 1000.0}) {
    times.push_back(h * ClusterConfig::kMsPerHour);
  }
  ClusterConfig cfg;
  cfg.mode = AnalysisMode::Availability;
  auto no_wd = unavailability_curve(cfg, times);
  cfg.watchdog = true;
  auto wd = unavailability_curve(cfg, times);

  CHECK(no_wd[0].second <= 1e-9);
  CHECK(wd[0].second <= 1e-9);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(wd[i].second <= no_wd[i].second + 1e-9);
  }
}

TEST_CASE("analytic CDF tracks the simulator through a majority-killing burst") {
  // N_F=2 on C=3 with the watchdog: exercises client-timeout restarts,
  // sub-second repairs, re-election and the lagging-follower reconciliation,
  // then compares against the simulator on the same expanded model.
  ClusterConfig cfg;
  cfg.n_f = 2;
  cfg.watchdog = true;
  cfg.e_s = 10;
  std::vector<double> ts{100.0, 300.0, 600.0, 1000.0};
  auto analytic = response_time_cdf(cfg, ts);

  SanModel expanded = expand_erlang(compose(cfg), cfg.e_s);
  PlaceId seq = *expanded.find_place("SequenceEnd");
  SimOptions opt;
  opt.stop_when = [seq](const Marking& m) { return m.tokens(seq) >= 1; };
  const std::size_t runs = 30'000;
  std::vector<double> hits;
  hits.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    SimRun run = simulate(expanded, 1000.0, 77777 + r * 1000003, opt);
    hits.push_back(run.stopped ? run.stop_time : 1e300);
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::size_t k = 0;
    for (double h : hits) {
      if (h <= ts[i]) ++k;
    }
    double p = static_cast<double>(k) / runs;
    double ci = 2.5758 * std::sqrt(p * (1.0 - p) / runs);
    CHECK(std::abs(p - analytic[i].second) <= ci);
  }
}

TEST_CASE("zero-failure mean response time sits near the 34 ms path sum") {
  ClusterConfig cfg;
  cfg.n_f = 0;
  cfg.e_s = 5;
  std::vector<double> times;
  for (int i = 0; i <= 600; ++i) times.push_back(0.25 * i);
  auto cdf = response_time_cdf(cfg, times);
  double mean = 0.0;
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    double w = times[i] - times[i - 1];
    mean += w * (1.0 - 0.5 * (cdf[i].second + cdf[i - 1].second));
  }
  CHECK(mean == doctest::Approx(34.0).epsilon(0.05));
}
