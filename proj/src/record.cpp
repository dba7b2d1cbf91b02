#include "qproj/record.hpp"

#include <sstream>

namespace qproj {

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string csv_field(const std::optional<double>& v) {
  if (!v) return "";
  return nlohmann::json(*v).dump();
}

// RFC 4180 quoting.
std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

nlohmann::json to_json(const ExperimentRecord& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["params"] = r.params;
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  j["estimate"] = opt(r.estimate);
  j["stderr"] = opt(r.stderr_);
  j["paper_bound"] = opt(r.paper_bound);
  j["pass"] = r.pass;
  j["wall_time"] = opt(r.wall_time);
  return j;
}

ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord r;
  r.experiment = j.at("experiment").get<std::string>();
  r.params = j.at("params");
  if (!r.params.is_object()) throw nlohmann::json::type_error::create(302, "params must be an object", &j);
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trials = j.at("trials").get<std::uint64_t>();
  r.estimate = opt_from(j, "estimate");
  r.stderr_ = opt_from(j, "stderr");
  r.paper_bound = opt_from(j, "paper_bound");
  r.pass = j.at("pass").get<bool>();
  r.wall_time = opt_from(j, "wall_time");
  return r;
}

std::string to_json_line(const ExperimentRecord& r) { return to_json(r).dump(); }

std::string csv_header() { return "experiment,seed,trials,estimate,stderr,paper_bound,pass,wall_time,params"; }

std::string to_csv_line(const ExperimentRecord& r) {
  std::ostringstream os;
  os << csv_quote(r.experiment) << ',' << r.seed << ',' << r.trials << ',' << csv_field(r.estimate) << ','
     << csv_field(r.stderr_) << ',' << csv_field(r.paper_bound) << ',' << (r.pass ? "true" : "false") << ','
     << csv_field(r.wall_time) << ',' << csv_quote(r.params.dump());
  return os.str();
}

}  // namespace qproj
