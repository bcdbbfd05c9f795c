#ifndef TROPICNET_TOOLS_COMMANDS_HPP
#define TROPICNET_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tropicnet/config.hpp"
#include "tropicnet/data.hpp"

namespace tropicnet::cli {

struct Command {
  std::string verb;  // train | eval | bench | sparsity-report | approx-demo
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  std::filesystem::path output_dir = "out";
};

struct ExperimentData {
  std::shared_ptr<const Dataset> train;
  Dataset test;
};

Config resolve_config(const Command& cmd);

/// Loads the configured dataset, applies feature selection and
/// normalization, then splits it.
ExperimentData load_experiment(const Config& config);

/// Unsplit dataset after feature selection and normalization.
Dataset load_all(const Config& config);

/// `count` rows cycling through the samples of `data`.
Dataset tile(const Dataset& data, std::size_t count);

int run_train(const Command& cmd);
int run_eval(const Command& cmd);
int run_bench(const Command& cmd);
int run_sparsity_report(const Command& cmd);
int run_approx_demo(const Command& cmd);

/// Dispatches on cmd.verb and maps exceptions to exit codes: 1 for numerical
/// failures, 2 for configuration, parse and I/O errors.
int run(const Command& cmd);

}  // namespace tropicnet::cli

#endif  // TROPICNET_TOOLS_COMMANDS_HPP
