#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sanperf/study.hpp"

using namespace sanperf;
using namespace sanperf::study;

namespace {

ResultTable sample_table() {
  ResultTable t;
  t.columns = {"x", "y"};
  t.rows = {{1.0, 0.123456789012345}};
  t.metadata = {{"study", "unit"}, {"tool_version", kToolVersion}};
  return t;
}

std::string temp_config(const std::string& body) {
  static int counter = 0;
  auto path = std::filesystem::temp_directory_path() /
              ("sanperf_test_cfg_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter++) + ".cfg");
  std::ofstream out(path);
  out << body;
  return path.string();
}

}  // namespace

TEST_CASE("study ids parse and list") {
  CHECK(all_studies().size() == 6);
  for (StudyId id : all_studies()) {
    auto parsed = parse_study_id(study_name(id));
    REQUIRE(parsed);
    CHECK(*parsed == id);
    CHECK_FALSE(study_description(id).empty());
  }
  CHECK_FALSE(parse_study_id("S9-not-a-study"));
}

TEST_CASE("csv: metadata comments, header, one line per row") {
  std::ostringstream os;
  emit_csv(sample_table(), os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "# study=unit");
  std::getline(is, line);
  CHECK(line == std::string("# tool_version=") + kToolVersion);
  std::getline(is, line);
  CHECK(line == "x,y");
  std::getline(is, line);
  CHECK(line == "1,0.123456789012");
  CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("csv emission is byte-deterministic") {
  std::ostringstream a, b;
  emit_csv(sample_table(), a);
  emit_csv(sample_table(), b);
  CHECK(a.str() == b.str());
}

TEST_CASE("json round-trips the full table") {
  ResultTable t = sample_table();
  std::ostringstream os;
  emit_json(t, os);
  std::istringstream is(os.str());
  ResultTable back = parse_json_table(is);
  CHECK(back == t);
}

TEST_CASE("emit to an unwritable path raises an I/O error") {
  CHECK_THROWS_AS(emit(sample_table(), OutputFormat::Csv, "/nonexistent-dir/x.csv"),
                  std::runtime_error);
}

TEST_CASE("S1 schema, monotone columns and byte-identical reruns") {
  std::string cfg = temp_config("E_S=1\n");
  StudySpec spec;
  spec.id = StudyId::S1CdfByClusterSize;
  spec.config_path = cfg;

  ResultTable t = run_study(spec);
  CHECK(t.columns == std::vector<std::string>{"t_ms", "P_C3", "P_C5", "P_C7"});
  REQUIRE(t.rows.size() == 1001);
  CHECK(t.rows[0][0] == 0.0);
  CHECK(t.rows[1000][0] == 1000.0);
  for (std::size_t col = 1; col <= 3; ++col) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      CHECK(t.rows[i][col] >= t.rows[i - 1][col] - 1e-9);
    }
    CHECK(t.rows[0][col] <= 1e-9);
  }

  // Echoed metadata names every effective config value.
  auto has_key = [&](const std::string& k) {
    for (auto& [key, value] : t.metadata) {
      if (key == k) return true;
    }
    return false;
  };
  for (const char* k : {"C", "N_F", "E_S", "watchdog", "mode", "T_M_best_ms",
                        "lambda_F_S_per_week", "solver_eps", "tool_version"}) {
    CHECK(has_key(k));
  }

  ResultTable again = run_study(spec);
  std::ostringstream a, b;
  emit_csv(t, a);
  emit_csv(again, b);
  CHECK(a.str() == b.str());
  std::remove(cfg.c_str());
}

TEST_CASE("rerunning from the echoed config reproduces the table bit-identically") {
  std::string cfg = temp_config("E_S=1\nN_F=2\nwatchdog=true\n");
  StudySpec spec;
  spec.id = StudyId::S1CdfByClusterSize;
  spec.config_path = cfg;
  ResultTable first = run_study(spec);

  // Reconstruct a config file from the metadata echo (config keys only).
  std::ostringstream body;
  for (auto& [key, value] : raft::config_metadata(raft::table2_preset())) {
    for (auto& [k, v] : first.metadata) {
      if (k == key) body << k << '=' << v << '\n';
    }
  }
  std::string echoed = temp_config(body.str());
  StudySpec respec = spec;
  respec.config_path = echoed;
  ResultTable second = run_study(respec);

  std::ostringstream a, b;
  emit_csv(first, a);
  emit_csv(second, b);
  CHECK(a.str() == b.str());
  std::remove(cfg.c_str());
  std::remove(echoed.c_str());
}

TEST_CASE("S4 runs both watchdog variants and starts available") {
  StudySpec spec;
  spec.id = StudyId::S4Unavailability1000h;
  ResultTable t = run_study(spec);
  CHECK(t.columns == std::vector<std::string>{"t_h", "P_CU_nowd", "P_CU_wd"});
  REQUIRE(t.rows.size() == 1001);
  CHECK(t.rows[0][1] <= 1e-9);
  CHECK(t.rows[0][2] <= 1e-9);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(t.rows[i][2] <= t.rows[i][1] + 1e-9);
  }
}

TEST_CASE("state-space limit surfaces as a structured, advisory error") {
  StudySpec spec;
  spec.id = StudyId::S1CdfByClusterSize;
  spec.max_states = 50;
  try {
    run_study(spec);
    FAIL("expected LimitError");
  } catch (const LimitError& e) {
    std::string msg = e.what();
    CHECK(msg.find("E_S") != std::string::npos);
    CHECK(e.states_explored > 0);
  }
}

TEST_CASE("config error propagates from the study layer") {
  std::string cfg = temp_config("C=4\n");
  StudySpec spec;
  spec.id = StudyId::S1CdfByClusterSize;
  spec.config_path = cfg;
  CHECK_THROWS_AS(run_study(spec), raft::ConfigError);
  std::remove(cfg.c_str());
}
