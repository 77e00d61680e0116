#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bratteli::cli {

/// Malformed or incomplete experiment configuration (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> values;
};

const std::vector<std::string>& experiment_names();
const std::vector<std::string>& recipe_names();

/// The exact configuration used by the acceptance suite. Throws ConfigError for unknown names.
ExperimentConfig recipe(const std::string& name);

/// `key = value` lines (TOML subset). An `experiment` key selects the experiment.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

/// Checks every key against the experiment schema, fills defaults and requires `seed`.
ExperimentConfig resolve(const ExperimentConfig& config);

/// FNV-1a over format_config of the resolved configuration.
std::string config_hash(const ExperimentConfig& resolved);

struct RunOutput {
  std::map<std::string, std::string> csv;  // file name -> contents; results.csv is always present
  nlohmann::ordered_json results;
  std::vector<nlohmann::ordered_json> events;
};

/// Runs a resolved configuration in memory.
RunOutput run_experiment(const ExperimentConfig& resolved);

/// Writes every CSV, summary.json and events.jsonl below `dir`.
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& resolved, const RunOutput& output);

/// Command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace bratteli::cli
