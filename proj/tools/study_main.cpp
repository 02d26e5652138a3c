// study: run predefined performability studies of a RAFT controller cluster
// and emit CSV/JSON result tables.
//
//   study list
//   study run <id> [--config FILE] [--out FILE] [--format csv|json]
//                  [--seed N] [--eps X] [--max-states N] [--runs N]
//
// Exit codes: 0 success, 2 configuration error, 3 state-space limit.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sanperf/study.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitLimit = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAFT cluster performability studies"};
  app.require_subcommand(1);

  CLI::App* list_cmd = app.add_subcommand("list", "List available studies");

  std::string study_id;
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::uint64_t seed = 42;
  double eps = 1e-9;
  std::size_t max_states = sanperf::ExplorationLimits{}.max_states;
  std::size_t runs = 100'000;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one study");
  run_cmd->add_option("id", study_id, "Study id (see `study list`)")->required();
  run_cmd->add_option("--config", config_path, "key=value cluster config file");
  run_cmd->add_option("--out", out_path, "Output file (default: stdout)");
  run_cmd->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--seed", seed, "Monte Carlo seed (S6)");
  run_cmd->add_option("--eps", eps, "Solver error tolerance (split over both tails)");
  run_cmd->add_option("--max-states", max_states, "State-space exploration cap");
  run_cmd->add_option("--runs", runs, "Monte Carlo replications (S6)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;  // 0 covers --help
  }

  if (list_cmd->parsed()) {
    for (auto id : sanperf::study::all_studies()) {
      std::cout << sanperf::study::study_name(id) << "\t"
                << sanperf::study::study_description(id) << "\n";
    }
    return kExitOk;
  }

  auto id = sanperf::study::parse_study_id(study_id);
  if (!id) {
    std::cerr << "unknown study '" << study_id << "'; see `study list`\n";
    return kExitConfig;
  }

  sanperf::study::StudySpec spec;
  spec.id = *id;
  if (!config_path.empty()) spec.config_path = config_path;
  spec.seed = seed;
  spec.eps = eps;
  spec.max_states = max_states;
  spec.oracle_runs = runs;

  try {
    sanperf::study::ResultTable table = sanperf::study::run_study(spec);
    auto fmt = format == "json" ? sanperf::study::OutputFormat::Json
                                : sanperf::study::OutputFormat::Csv;
    if (out_path.empty()) {
      if (fmt == sanperf::study::OutputFormat::Csv) {
        sanperf::study::emit_csv(table, std::cout);
      } else {
        sanperf::study::emit_json(table, std::cout);
      }
    } else {
      sanperf::study::emit(table, fmt, out_path);
    }
    return kExitOk;
  } catch (const sanperf::raft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sanperf::LimitError& e) {
    std::cerr << "state-space limit: " << e.what() << "\n";
    return kExitLimit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
