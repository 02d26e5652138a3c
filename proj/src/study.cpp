#include "sanperf/study.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sanperf/text_format.hpp"

namespace sanperf::study {

namespace {

using raft::AnalysisMode;
using raft::ClusterConfig;
using raft::InjectionMix;

std::vector<double> ms_grid() {
  std::vector<double> t(1001);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

std::vector<double> hourly_grid_ms() {
  std::vector<double> t(1001);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(i) * ClusterConfig::kMsPerHour;
  }
  return t;
}

SolverSettings settings_for(const StudySpec& spec) {
  return SolverSettings{spec.eps / 2.0, spec.eps / 2.0};
}

ExplorationLimits limits_for(const StudySpec& spec) {
  ExplorationLimits limits;
  limits.max_states = spec.max_states;
  return limits;
}

ClusterConfig base_config(const StudySpec& spec) {
  if (spec.config_path) return raft::load_cluster_config(*spec.config_path);
  return raft::table2_preset();
}

void append_common_metadata(ResultTable& table, const StudySpec& spec,
                            const ClusterConfig& cfg) {
  table.metadata.emplace_back("study", study_name(spec.id));
  table.metadata.emplace_back("tool_version", kToolVersion);
  table.metadata.emplace_back("solver_eps", format_exact(spec.eps));
  table.metadata.emplace_back("max_states", std::to_string(spec.max_states));
  for (auto& kv : raft::config_metadata(cfg)) table.metadata.push_back(kv);
}

double binomial_ci99(double p, std::size_t n) {
  constexpr double z99 = 2.5758293035489004;
  return z99 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

ResultTable run_s1(const StudySpec& spec) {
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Response;
  base.n_f = 1;
  base.inject_mix = InjectionMix::Mixed;

  const std::vector<double> times = ms_grid();
  ResultTable table;
  table.columns = {"t_ms", "P_C3", "P_C5", "P_C7"};
  table.rows.assign(times.size(), {});
  for (std::size_t i = 0; i < times.size(); ++i) table.rows[i].push_back(times[i]);

  for (unsigned c : {3u, 5u, 7u}) {
    ClusterConfig cfg = base;
    cfg.c = c;
    auto cdf = raft::response_time_cdf(cfg, times, limits_for(spec), settings_for(spec));
    for (std::size_t i = 0; i < times.size(); ++i) {
      table.rows[i].push_back(cdf[i].second);
    }
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("study_C_values", "3,5,7");
  table.metadata.emplace_back("study_N_F", "1");
  table.metadata.emplace_back("study_inject_mix", "mixed");
  table.metadata.emplace_back("time_grid", "0..1000 ms step 1");
  return table;
}

ResultTable run_s2(const StudySpec& spec) {
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Response;

  const unsigned max_nf = base.c / 2 + 1;
  const std::vector<double> times = ms_grid();
  ResultTable table;
  table.columns = {"t_ms"};
  table.rows.assign(times.size(), {});
  for (std::size_t i = 0; i < times.size(); ++i) table.rows[i].push_back(times[i]);

  for (unsigned nf = 1; nf <= max_nf; ++nf) {
    for (InjectionMix mix : {InjectionMix::Mixed, InjectionMix::BundleOnly}) {
      for (bool wd : {false, true}) {
        ClusterConfig cfg = base;
        cfg.n_f = nf;
        cfg.lambda_f_si_per_ms.reset();  // keep the N_F/30 coupling
        cfg.inject_mix = mix;
        cfg.watchdog = wd;
        auto cdf =
            raft::response_time_cdf(cfg, times, limits_for(spec), settings_for(spec));
        std::string col = "P_NF" + std::to_string(nf) +
                          (mix == InjectionMix::Mixed ? "_mixed" : "_bundle") +
                          (wd ? "_wd" : "");
        table.columns.push_back(col);
        for (std::size_t i = 0; i < times.size(); ++i) {
          table.rows[i].push_back(cdf[i].second);
        }
      }
    }
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("study_N_F_values", "1..floor(C/2)+1");
  table.metadata.emplace_back("time_grid", "0..1000 ms step 1");
  return table;
}

ResultTable run_s3(const StudySpec& spec) {
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Response;
  base.c = 7;
  base.e_s = 5;  // scalability setting for the 7-node sweep
  base.inject_mix = InjectionMix::Mixed;

  const unsigned max_nf = base.c / 2 + 1;
  const std::vector<double> times = ms_grid();
  ResultTable table;
  table.columns = {"t_ms"};
  table.rows.assign(times.size(), {});
  for (std::size_t i = 0; i < times.size(); ++i) table.rows[i].push_back(times[i]);

  for (unsigned nf = 1; nf <= max_nf; ++nf) {
    for (bool wd : {false, true}) {
      ClusterConfig cfg = base;
      cfg.n_f = nf;
      cfg.lambda_f_si_per_ms.reset();
      cfg.watchdog = wd;
      auto cdf =
          raft::response_time_cdf(cfg, times, limits_for(spec), settings_for(spec));
      table.columns.push_back("P_NF" + std::to_string(nf) + (wd ? "_wd" : ""));
      for (std::size_t i = 0; i < times.size(); ++i) {
        table.rows[i].push_back(cdf[i].second);
      }
    }
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("study_C", "7");
  table.metadata.emplace_back("study_E_S", "5");
  table.metadata.emplace_back("study_N_F_values", "1..4");
  table.metadata.emplace_back("time_grid", "0..1000 ms step 1");
  return table;
}

ResultTable run_s4(const StudySpec& spec) {
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Availability;

  const std::vector<double> times = hourly_grid_ms();
  ResultTable table;
  table.columns = {"t_h", "P_CU_nowd", "P_CU_wd"};
  table.rows.assign(times.size(), {});
  for (std::size_t i = 0; i < times.size(); ++i) {
    table.rows[i].push_back(times[i] / ClusterConfig::kMsPerHour);
  }

  for (bool wd : {false, true}) {
    ClusterConfig cfg = base;
    cfg.watchdog = wd;
    auto curve =
        raft::unavailability_curve(cfg, times, limits_for(spec), settings_for(spec));
    for (std::size_t i = 0; i < times.size(); ++i) {
      table.rows[i].push_back(curve[i].second);
    }
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("study_watchdog_variants", "false,true");
  table.metadata.emplace_back("time_grid", "0..1000 h step 1");
  return table;
}

ResultTable run_s5(const StudySpec& spec) {
  using clock = std::chrono::steady_clock;
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Response;
  base.inject_mix = InjectionMix::Mixed;

  const std::vector<double> times = ms_grid();
  ResultTable table;
  table.columns = {"C", "E_S", "N_F", "states", "transitions", "gen_ms", "solve_ms"};

  for (unsigned c : {3u, 5u, 7u}) {
    for (unsigned es : {5u, 10u}) {
      ClusterConfig cfg = base;
      cfg.c = c;
      cfg.e_s = es;
      cfg.n_f = c / 2 + 1;
      cfg.lambda_f_si_per_ms.reset();

      auto t0 = clock::now();
      SanModel model = expand_erlang(raft::compose(cfg), cfg.e_s);
      Ctmc chain = generate(model, limits_for(spec));
      auto t1 = clock::now();
      auto values = reward_sweep(chain, times, {raft::event_completed_reward(model)},
                                 settings_for(spec));
      auto t2 = clock::now();

      auto ms = [](auto a, auto b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
      };
      table.rows.push_back({static_cast<double>(c), static_cast<double>(es),
                            static_cast<double>(cfg.n_f),
                            static_cast<double>(chain.state_count()),
                            static_cast<double>(chain.transitions().size()),
                            ms(t0, t1), ms(t1, t2)});
      (void)values;
    }
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("study_grid", "C in {3,5,7} x E_S in {5,10}, N_F=floor(C/2)+1");
  table.metadata.emplace_back("solve", "response CDF, 1001 points, 0..1000 ms");
  return table;
}

ResultTable run_s6(const StudySpec& spec) {
  ClusterConfig base = base_config(spec);
  base.mode = AnalysisMode::Response;
  base.c = 3;
  base.n_f = 1;
  base.lambda_f_si_per_ms.reset();
  base.inject_mix = InjectionMix::BundleOnly;

  const std::vector<double> checkpoints = {50.0, 200.0, 500.0, 1000.0};
  auto analytic =
      raft::response_time_cdf(base, checkpoints, limits_for(spec), settings_for(spec));

  const double horizon = checkpoints.back();
  SanModel exact_model = raft::compose(base);
  SanModel expanded_model = expand_erlang(exact_model, base.e_s);

  auto completion_times = [&](const SanModel& model) {
    std::vector<double> hits;
    hits.reserve(spec.oracle_runs);
    SimOptions options;
    PlaceId seq_end = *model.find_place("SequenceEnd");
    options.stop_when = [seq_end](const Marking& m) {
      return m.tokens(seq_end) >= 1;
    };
    for (std::size_t r = 0; r < spec.oracle_runs; ++r) {
      std::uint64_t rep_seed = spec.seed * 0x9E3779B97F4A7C15ull + r;
      SimRun run = simulate(model, horizon, rep_seed, options);
      hits.push_back(run.stopped ? run.stop_time
                                 : std::numeric_limits<double>::infinity());
    }
    return hits;
  };
  std::vector<double> expanded_hits = completion_times(expanded_model);
  std::vector<double> exact_hits = completion_times(exact_model);

  ResultTable table;
  table.columns = {"t_ms",     "analytic_P",      "des_mean",       "des_ci99",
                   "des_exact_mean", "des_exact_ci99", "runs"};
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    auto fraction_by = [&](const std::vector<double>& hits, double t) {
      std::size_t k = 0;
      for (double h : hits) {
        if (h <= t) ++k;
      }
      return static_cast<double>(k) / static_cast<double>(hits.size());
    };
    double p_expanded = fraction_by(expanded_hits, checkpoints[i]);
    double p_exact = fraction_by(exact_hits, checkpoints[i]);
    table.rows.push_back({checkpoints[i], analytic[i].second, p_expanded,
                          binomial_ci99(p_expanded, spec.oracle_runs), p_exact,
                          binomial_ci99(p_exact, spec.oracle_runs),
                          static_cast<double>(spec.oracle_runs)});
  }
  append_common_metadata(table, spec, base);
  table.metadata.emplace_back("seed", std::to_string(spec.seed));
  table.metadata.emplace_back("rng", kRngAlgorithm);
  table.metadata.emplace_back("oracle_runs", std::to_string(spec.oracle_runs));
  table.metadata.emplace_back(
      "des_columns", "des_*: Erlang-expanded model; des_exact_*: exact delays");
  return table;
}

}  // namespace

std::optional<StudyId> parse_study_id(const std::string& name) {
  for (StudyId id : all_studies()) {
    if (study_name(id) == name) return id;
  }
  return std::nullopt;
}

std::string study_name(StudyId id) {
  switch (id) {
    case StudyId::S1CdfByClusterSize: return "S1-cdf-by-cluster-size";
    case StudyId::S2CorrelatedFailures: return "S2-correlated-failures";
    case StudyId::S3WatchdogResponse: return "S3-watchdog-response";
    case StudyId::S4Unavailability1000h: return "S4-unavailability-1000h";
    case StudyId::S5StateSpaceReport: return "S5-statespace-report";
    case StudyId::S6OracleCrosscheck: return "S6-oracle-crosscheck";
  }
  return "unknown";
}

std::string study_description(StudyId id) {
  switch (id) {
    case StudyId::S1CdfByClusterSize:
      return "response-time CDF for C in {3,5,7}, single mixed failure injection";
    case StudyId::S2CorrelatedFailures:
      return "response-time CDFs for N_F=1..floor(C/2)+1, mixed and bundle-only, "
             "watchdog on/off";
    case StudyId::S3WatchdogResponse:
      return "7-node response-time sweep over N_F, watchdog on/off";
    case StudyId::S4Unavailability1000h:
      return "hourly cluster unavailability over 0..1000 h, watchdog on/off";
    case StudyId::S5StateSpaceReport:
      return "state-space size, generation and solve time per (C, E_S, N_F)";
    case StudyId::S6OracleCrosscheck:
      return "analytic response probabilities vs Monte Carlo estimates with CIs";
  }
  return "";
}

std::vector<StudyId> all_studies() {
  return {StudyId::S1CdfByClusterSize,  StudyId::S2CorrelatedFailures,
          StudyId::S3WatchdogResponse,  StudyId::S4Unavailability1000h,
          StudyId::S5StateSpaceReport,  StudyId::S6OracleCrosscheck};
}

ResultTable run_study(const StudySpec& spec) {
  try {
    switch (spec.id) {
      case StudyId::S1CdfByClusterSize: return run_s1(spec);
      case StudyId::S2CorrelatedFailures: return run_s2(spec);
      case StudyId::S3WatchdogResponse: return run_s3(spec);
      case StudyId::S4Unavailability1000h: return run_s4(spec);
      case StudyId::S5StateSpaceReport: return run_s5(spec);
      case StudyId::S6OracleCrosscheck: return run_s6(spec);
    }
    throw std::runtime_error("unknown study id");
  } catch (const LimitError& e) {
    throw LimitError(std::string(e.what()) +
                         " — rerun with a smaller E_S or max N_F, or a larger "
                         "--max-states budget",
                     e.states_explored, e.frontier_size);
  }
}

void emit_csv(const ResultTable& table, std::ostream& os) {
  for (const auto& [key, value] : table.metadata) {
    os << "# " << key << '=' << value << '\n';
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) os << ',';
    os << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << format_sig(row[i], 12);
    }
    os << '\n';
  }
}

void emit_json(const ResultTable& table, std::ostream& os) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [key, value] : table.metadata) meta[key] = value;
  j["metadata"] = std::move(meta);
  j["columns"] = table.columns;
  j["rows"] = table.rows;
  os << j.dump(2) << '\n';
}

ResultTable parse_json_table(std::istream& is) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(is);
  ResultTable table;
  for (auto& [key, value] : j.at("metadata").items()) {
    table.metadata.emplace_back(key, value.get<std::string>());
  }
  table.columns = j.at("columns").get<std::vector<std::string>>();
  table.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  return table;
}

void emit(const ResultTable& table, OutputFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  if (format == OutputFormat::Csv) {
    emit_csv(table, out);
  } else {
    emit_json(table, out);
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace sanperf::study
