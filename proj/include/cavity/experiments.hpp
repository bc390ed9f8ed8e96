#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cavity/config.hpp"

namespace cavity {

using CsvCell = std::variant<double, long long, std::string>;

struct CsvColumn {
  std::string name;
  std::string unit;   // "1" for dimensionless, "" for labels
};

struct CsvTable {
  std::string name;   // file stem, appended to the output prefix
  std::string role;   // e.g. "boundary", "grid"
  std::vector<CsvColumn> columns;
  std::vector<std::vector<CsvCell>> rows;
};

/// RFC 4180 text with one header row, LF endings, doubles at 17 significant digits.
std::string csv_text(const CsvTable& table);

struct ResultBundle {
  std::string experiment;
  std::vector<CsvTable> tables;
  nlohmann::json results = nlohmann::json::object();
  nlohmann::json regressions = nlohmann::json::array();
  std::vector<std::string> warnings;
  nlohmann::json timings = nlohmann::json::object();
};

struct RunOptions {
  std::optional<std::string> out_prefix;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;
};

/// Resolved execution context passed to the experiment kernels.
struct RunContext {
  int threads = 1;
  std::uint64_t seed = 1;
};

std::vector<std::string> experiment_names();

/// Parsed and validated experiment, ready to execute. `outputs` lists the table names
/// that `execute` will produce, so output collisions are detected before computing.
struct PreparedExperiment {
  std::string name;
  std::vector<std::string> outputs;
  std::function<ResultBundle()> execute;
};

PreparedExperiment prepare_experiment(ExperimentConfig& config, const RunContext& context);

/// Runs the experiment named in [experiment] name. Consumes config keys; unknown keys
/// are reported as ConfigError before any computation starts.
ResultBundle run_experiment(ExperimentConfig& config, const RunContext& context);

/// Thrown when an output file exists and overwriting was not requested.
class OutputCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WrittenBundle {
  std::string manifest_path;
  std::vector<std::string> files;
};

/// Parses and runs `config_path`, then writes `<prefix>_<table>.csv` for every table and
/// `<prefix>_manifest.json`. The prefix comes from options, then [experiment] out.
WrittenBundle run(const std::string& config_path, const RunOptions& options);

std::string sha256_hex(const std::string& bytes);

/// `{"error": {...}}` record for failures; `kind` names the failure class.
nlohmann::json error_record(const std::exception& e);
int exit_code_for(const std::exception& e);

}  // namespace cavity
