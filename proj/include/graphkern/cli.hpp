#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphkern/experiment.hpp"

namespace graphkern::cli {

/// Everything a run needs, loaded from the JSON config file.
struct RunConfig {
  // File mode.
  std::optional<std::filesystem::path> measurements;
  std::optional<std::filesystem::path> coordinates;
  // Synthetic mode.
  std::optional<SyntheticScenario> synthetic;

  ExperimentConfig experiment;
  std::vector<int> n_train_sweep{4, 8, 16, 30};
  /// Regularization for `fit`; defaults to the experiment's fixed single-kernel values.
  std::optional<Regularization> fit;
  std::filesystem::path output_dir = "out";
};

/// Relative paths resolve against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// Throws IoError, ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Default config document reproducing the reference experiment on synthetic data.
nlohmann::json default_config_json();

/// Builds the dataset the config points at (file pair or synthetic generator).
Dataset load_dataset(const RunConfig& config);

enum ExitCode : int { kSuccess = 0, kNumericFailure = 1, kInputError = 2 };

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graphkern::cli
