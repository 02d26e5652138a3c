#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sanperf/raft.hpp"

// Predefined studies over the cluster models, emitted as CSV or JSON tables
// with a reproducibility metadata block.

namespace sanperf::study {

inline constexpr const char* kToolVersion = "0.1.0";

enum class StudyId {
  S1CdfByClusterSize,
  S2CorrelatedFailures,
  S3WatchdogResponse,
  S4Unavailability1000h,
  S5StateSpaceReport,
  S6OracleCrosscheck,
};

std::optional<StudyId> parse_study_id(const std::string& name);
std::string study_name(StudyId id);
std::string study_description(StudyId id);
std::vector<StudyId> all_studies();

struct StudySpec {
  StudyId id = StudyId::S1CdfByClusterSize;
  std::optional<std::string> config_path;
  std::uint64_t seed = 42;
  double eps = 1e-9;  // split evenly between the truncation tails
  std::size_t max_states = ExplorationLimits{}.max_states;
  std::size_t oracle_runs = 100'000;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  bool operator==(const ResultTable&) const = default;
};

ResultTable run_study(const StudySpec& spec);

// CSV: '#'-prefixed metadata lines, header row, data rows; '.' decimal
// separator, fixed 12 significant digits, byte-deterministic.
void emit_csv(const ResultTable& table, std::ostream& os);

// JSON object {"metadata": {...}, "columns": [...], "rows": [[...]]}.
void emit_json(const ResultTable& table, std::ostream& os);
ResultTable parse_json_table(std::istream& is);

enum class OutputFormat { Csv, Json };
void emit(const ResultTable& table, OutputFormat format, const std::string& path);

}  // namespace sanperf::study
