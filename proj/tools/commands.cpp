#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "tropicnet/approx.hpp"
#include "tropicnet/checkpoint.hpp"
#include "tropicnet/errors.hpp"
#include "tropicnet/init.hpp"
#include "tropicnet/metrics.hpp"
#include "tropicnet/trainer.hpp"

namespace tropicnet::cli {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// Creates the output directory and writes the resolved configuration into it.
Config prepare(const Command& cmd) {
  Config config = resolve_config(cmd);
  std::filesystem::create_directories(cmd.output_dir);
  config.save(cmd.output_dir / "config.resolved");
  return config;
}

void print_eval(const char* split, const EvalReport& r) {
  std::cout << split << ": samples=" << r.samples << " max_loss=" << r.max_loss << " avg_loss=" << r.avg_loss
            << " accuracy=" << r.accuracy << " macro_f1=" << r.macro_f1 << '\n';
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        numeric = numeric && field.find_first_not_of(" \t\r", used) == std::string::npos;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw ParseError(path.string() + ": malformed number", line_no);
    }
    if (row.size() < 2) throw ParseError(path.string() + ": need coordinates and a value", line_no);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ": inconsistent column count", line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no rows", line_no);
  return rows;
}

// Splits rows of (x_1..x_P, f) into a point matrix and values.
std::pair<Matrix, Vector> points_and_values(const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.front().size() - 1;
  Matrix x(rows.size(), dim);
  Vector f(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end() - 1, x.row(r).begin());
    f[r] = rows[r].back();
  }
  return {std::move(x), std::move(f)};
}

}  // namespace

Dataset tile(const Dataset& data, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t n = 0; n < count; ++n) idx[n] = n % data.size();
  return subset(data, idx);
}

Config resolve_config(const Command& cmd) {
  Config config;
  if (!cmd.config_path.empty()) config.merge_file(cmd.config_path);
  for (const auto& o : cmd.overrides) config.apply_override(o);
  return config;
}

Dataset load_all(const Config& config) {
  const std::string& name = config.get("dataset");
  Dataset data;
  if (name == "iris") {
    data = load_iris_csv(config.get_path("iris_csv"));
  } else if (name == "mnist") {
    data = load_idx(config.get_path("mnist_images"), config.get_path("mnist_labels"));
    const std::size_t stride = config.get_size("pixel_stride");
    const std::size_t offset = config.get_size("pixel_offset");
    if (stride != 1 || offset != 0) {
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(data.features()))));
      if (side * side != data.features()) throw ConfigError("pixel_stride needs square images");
      data = select_features(data, pixel_grid(side, side, stride, offset));
    }
  } else {
    throw ConfigError("unknown dataset '" + name + "'");
  }
  try {
    std::string scheme = config.get("normalization");
    if (scheme == "auto") scheme = name == "mnist" ? "unit_byte" : "none";
    data = normalize(data, parse_normalization(scheme));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  data.validate();
  return data;
}

ExperimentData load_experiment(const Config& config) {
  const Dataset data = load_all(config);
  const std::uint64_t seed = config.get_u64("split_seed");
  auto [train, test] = split(data, config.get_double("train_fraction"), seed);
  const std::size_t n_train = config.get_size("train_samples");
  if (n_train != 0 && n_train < train.size()) train = sample_subset(train, n_train, seed + 1);
  const std::size_t n_test = config.get_size("test_samples");
  if (n_test != 0 && n_test < test.size()) test = sample_subset(test, n_test, seed + 2);
  return {std::make_shared<const Dataset>(std::move(train)), std::move(test)};
}

int run_train(const Command& cmd) {
  const Config config = prepare(cmd);
  const TrainConfig tc = to_train_config(config);
  const ExperimentData data = load_experiment(config);
  const LmmModel model = make_lmm(InitSpec{tc.init, tc.k, std::nullopt, tc.seed}, *data.train, tc.hidden);

  TrainState state = init_state(model, data.train, tc);
  const TrainLog log = tc.objective == Objective::max ? train_max(state, tc) : train_avg_sgd(state, tc);

  auto log_out = open_output(cmd.output_dir / "train_log.csv");
  write_train_log(log_out, log);
  save_checkpoint(cmd.output_dir / "model.tnet", state.model);

  const EvalReport train_report = evaluate(state.model, *data.train, state.workers);
  print_eval("train", train_report);
  if (data.test.size() > 0) {
    const EvalReport test_report = evaluate(state.model, data.test, state.workers);
    print_eval("test", test_report);
    auto eval_out = open_output(cmd.output_dir / "eval.csv");
    write_eval_csv(eval_out, test_report, data.test.class_names);
  }
  std::cout << "iterations=" << state.iter << " seconds=" << log.total_seconds << '\n';
  return 0;
}

int run_eval(const Command& cmd) {
  const Config config = prepare(cmd);
  if (config.get("checkpoint").empty()) throw ConfigError("eval needs checkpoint=PATH");
  const AnyModel model = load_checkpoint(config.get("checkpoint"));
  const ExperimentData data = load_experiment(config);
  const Dataset& target = data.test.size() > 0 ? data.test : *data.train;
  const EvalReport report = std::visit([&](const auto& m) { return evaluate(m, target); }, model);
  print_eval("test", report);
  auto out = open_output(cmd.output_dir / "eval.csv");
  write_eval_csv(out, report, target.class_names);
  return 0;
}

int run_bench(const Command& cmd) {
  const Config config = prepare(cmd);
  TrainConfig tc = to_train_config(config);
  tc.iterations = config.get_size("bench_iterations");
  tc.phase_switch = tc.iterations;  // Polyak steps throughout
  std::vector<UpdateMode> modes;
  std::stringstream ss(config.get("bench_modes"));
  for (std::string m; std::getline(ss, m, ',');) {
    try {
      modes.push_back(parse_update_mode(m));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  const auto data = std::make_shared<const Dataset>(tile(load_all(config), config.get_size("bench_samples")));
  const LmmModel model = structured_init(*data, tc.hidden, tc.k, tc.seed);
  const auto rows = benchmark(model, data, tc, modes);
  auto out = open_output(cmd.output_dir / "bench.csv");
  write_bench_csv(out, rows);
  write_bench_csv(std::cout, rows);
  return 0;
}

int run_sparsity_report(const Command& cmd) {
  const Config config = prepare(cmd);
  Dataset data = load_all(config);
  const std::size_t n = config.get_size("sparsity_samples");
  const std::uint64_t seed = config.get_u64("seed");
  if (n != 0 && n < data.size()) data = sample_subset(data, n, seed);

  const std::string& probe = config.get("sparsity_probe");
  std::vector<SparsityProbe> probes;
  if (probe == "both") {
    probes = {SparsityProbe::morph_perceptron, SparsityProbe::linear_maxplus};
  } else {
    try {
      probes = {parse_sparsity_probe(probe)};
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  std::vector<SparsityReport> reports;
  for (SparsityProbe p : probes) reports.push_back(sparsity_study(data, seed, p, config.get_size("sparsity_hidden")));
  auto out = open_output(cmd.output_dir / "sparsity.csv");
  write_sparsity_csv(out, reports);
  write_sparsity_csv(std::cout, reports);
  return 0;
}

int run_approx_demo(const Command& cmd) {
  const Config config = prepare(cmd);
  const double lipschitz = config.get_double("approx_lipschitz");
  const std::size_t n_queries = config.get_size("approx_queries");
  std::mt19937_64 rng(config.get_u64("seed"));

  Matrix grid;
  Vector f_grid;
  Matrix queries;
  Vector f_queries;
  if (config.get("approx_grid").empty()) {
    const double step = config.get_double("approx_step");
    if (!(step > 0.0 && step <= 1.0)) throw ConfigError("approx_step must be in (0, 1]");
    auto f = [](double x) { return std::abs(x - 0.3); };
    const auto m = static_cast<std::size_t>(std::llround(1.0 / step)) + 1;
    grid = Matrix(m, 1);
    f_grid.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      grid(i, 0) = std::min(1.0, static_cast<double>(i) * step);
      f_grid[i] = f(grid(i, 0));
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    queries = Matrix(n_queries + m, 1);
    f_queries.resize(n_queries + m);
    for (std::size_t q = 0; q < n_queries + m; ++q) {
      queries(q, 0) = q < m ? grid(q, 0) : u(rng);
      f_queries[q] = f(queries(q, 0));
    }
  } else {
    std::tie(grid, f_grid) = points_and_values(read_numeric_csv(config.get_path("approx_grid")));
    // Without an analytic f, the grid rows themselves are the query points.
    queries = grid;
    f_queries = f_grid;
  }

  PyramidBank bank = build_bank(grid, f_grid, lipschitz);
  bank.delta = covering_radius(grid, queries);
  auto out = open_output(cmd.output_dir / "approx.csv");
  out.precision(12);
  for (std::size_t p = 0; p < grid.cols(); ++p) out << (grid.cols() == 1 ? "x" : "x" + std::to_string(p)) << ',';
  out << "f,h,error\n";
  double worst = 0.0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const double h = eval_h(bank, queries.row(q));
    const double err = std::abs(h - f_queries[q]);
    worst = std::max(worst, err);
    for (double v : queries.row(q)) out << v << ',';
    out << f_queries[q] << ',' << h << ',' << err << '\n';
  }
  std::cout << "pyramids=" << bank.size() << " delta=" << bank.delta << " bound=" << 2.0 * lipschitz * bank.delta
            << " max_error=" << worst << '\n';
  return 0;
}

int run(const Command& cmd) {
  try {
    if (cmd.verb == "train") return run_train(cmd);
    if (cmd.verb == "eval") return run_eval(cmd);
    if (cmd.verb == "bench") return run_bench(cmd);
    if (cmd.verb == "sparsity-report") return run_sparsity_report(cmd);
    if (cmd.verb == "approx-demo") return run_approx_demo(cmd);
    std::cerr << "unknown command '" << cmd.verb << "'\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 1;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tropicnet::cli
