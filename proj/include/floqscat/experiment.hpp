#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace floqscat {

inline constexpr int kConfigSchemaVersion = 1;

/// Experiment kinds accepted by run_experiment.
const std::vector<std::string>& experiment_kinds();

/// Reads a JSON config and remembers its directory for relative spec paths.
nlohmann::json load_config(const std::string& path);

/// Sets a dotted path ("fields.v.A=0.5"); the value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

/// Schema and cross-field checks. Returns the resolved config: spec files inlined, defaults filled in.
/// `kind` may be empty, in which case the config must name it. Throws ConfigInvalid naming the field.
nlohmann::json validate_config(const nlohmann::json& cfg, const std::string& kind = "");

struct ExperimentResult {
  std::string kind;
  std::string verdict;  // pass | not-converged | boundary-contaminated
  int exit_code = 0;    // 0 pass, 2 not converged at this scale
  std::string summary;
  std::map<std::string, std::string> artifacts;  // file name -> contents
  nlohmann::json timings;
};

/// Runs a resolved config. Library errors propagate with their own codes.
ExperimentResult run_experiment(const nlohmann::json& resolved);

/// Resolved config, versions, timings and artifact list.
nlohmann::json make_manifest(const nlohmann::json& resolved, const ExperimentResult& r);

/// Writes the artifacts, manifest.json and summary.txt into `dir` (created if missing).
void write_outputs(const std::string& dir, const nlohmann::json& manifest, const ExperimentResult& r);

}  // namespace floqscat
