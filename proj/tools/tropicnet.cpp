#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Max-plus network training and evaluation"};
  app.require_subcommand(1);

  tropicnet::cli::Command cmd;
  const std::pair<const char*, const char*> verbs[] = {
      {"train", "train a model and write train_log.csv, model.tnet and eval.csv"},
      {"eval", "evaluate a checkpoint on the test split"},
      {"bench", "time dense, sparse and skip-W0 updates"},
      {"sparsity-report", "subgradient sparsity at Glorot initialization"},
      {"approx-demo", "pyramid-bank approximation of a Lipschitz function"},
  };
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", cmd.config_path, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", cmd.overrides, "override one key (key=value), repeatable");
    sub->add_option("--out", cmd.output_dir, "output directory")->capture_default_str();
    sub->callback([&cmd, sub] { cmd.verb = sub->get_name(); });
  }

  CLI11_PARSE(app, argc, argv);
  return tropicnet::cli::run(cmd);
}
