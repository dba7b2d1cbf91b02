#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace qproj {

// One line of experiment output. params is a JSON object (keys sorted) so
// every record carries what is needed to rerun it.
struct ExperimentRecord {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::optional<double> estimate;
  std::optional<double> stderr_;
  std::optional<double> paper_bound;
  bool pass = true;
  std::optional<double> wall_time;  // seconds; null unless timing was asked for

  bool operator==(const ExperimentRecord&) const = default;
};

nlohmann::json to_json(const ExperimentRecord& r);
ExperimentRecord record_from_json(const nlohmann::json& j);

// Compact single-line JSON.
std::string to_json_line(const ExperimentRecord& r);

// Column order: experiment,seed,trials,estimate,stderr,paper_bound,pass,wall_time,params
std::string csv_header();
std::string to_csv_line(const ExperimentRecord& r);

}  // namespace qproj
