#include "tropicnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tropicnet/errors.hpp"

#ifndef TROPICNET_DEFAULT_DATA_DIR
#define TROPICNET_DEFAULT_DATA_DIR "data"
#endif

namespace tropicnet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

const std::vector<ConfigKey>& Config::schema() {
  static const std::vector<ConfigKey> keys = {
      {"dataset", "iris", "iris | mnist"},
      {"data_dir", TROPICNET_DEFAULT_DATA_DIR, "base directory for relative data paths"},
      {"iris_csv", "iris.csv", "CSV with features and a string label"},
      {"mnist_images", "mnist5k-images-idx3-ubyte", "IDX image file"},
      {"mnist_labels", "mnist5k-labels-idx1-ubyte", "IDX label file"},
      {"normalization", "auto", "none | unit_byte | auto (unit_byte for mnist, none for iris)"},
      {"train_fraction", "0.7", "fraction of samples in the training split"},
      {"split_seed", "0", "seed of the train/test shuffle"},
      {"train_samples", "0", "keep this many training samples (0 = all)"},
      {"test_samples", "0", "keep this many test samples (0 = all)"},
      {"pixel_stride", "1", "keep every n-th pixel row and column (IDX data only)"},
      {"pixel_offset", "0", "first kept pixel row and column"},
      {"objective", "max", "max | avg"},
      {"mode", "sparse", "dense | sparse | sparse_skip_w0"},
      {"iterations", "50000", "training iterations"},
      {"phase_switch", "auto", "first iteration of the constant-step phase (auto = iterations / 2)"},
      {"epsilon", "0.1", "constant step is epsilon / (2 sqrt(2C))"},
      {"target_loss", "0", "target value of the Polyak step"},
      {"skip_ratio", "100", "W0 update period in sparse_skip_w0 mode"},
      {"init", "structured", "structured | gaussian | uniform"},
      {"k", "4", "initialization scale"},
      {"H", "20", "hidden neurons"},
      {"seed", "0", "initialization and SGD seed"},
      {"log_every", "100", "training log period"},
      {"audit_every", "0", "rebuild audit period (0 = off)"},
      {"workers", "0", "worker threads (0 = hardware threads)"},
      {"checkpoint", "", "model file read by eval"},
      {"bench_samples", "10000", "benchmark training set size"},
      {"bench_iterations", "300", "benchmark iterations per arm"},
      {"bench_modes", "sparse_skip_w0,sparse,dense", "comma-separated update modes"},
      {"sparsity_samples", "1000", "samples in the sparsity study"},
      {"sparsity_probe", "morph_perceptron", "morph_perceptron | linear_maxplus | both"},
      {"sparsity_hidden", "0", "linear layer width of the linear_maxplus probe (0 = C)"},
      {"approx_grid", "", "CSV of x,f rows (empty = f(x) = |x - 0.3| on a uniform grid)"},
      {"approx_step", "0.01", "grid step of the built-in example"},
      {"approx_lipschitz", "1", "Lipschitz constant K"},
      {"approx_queries", "10000", "uniform query points"},
  };
  return keys;
}

Config::Config() {
  for (const auto& key : schema()) values_[key.name] = key.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::merge_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      apply_override(t);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  merge_text(buffer.str(), path.string());
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }
std::size_t Config::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }
std::uint64_t Config::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::optional<std::size_t> Config::get_optional_size(const std::string& key) const {
  const std::string& v = get(key);
  if (v.empty() || v == "auto") return std::nullopt;
  return get_size(key);
}

std::filesystem::path Config::get_path(const std::string& key) const {
  const std::filesystem::path p = get(key);
  if (p.empty() || p.is_absolute() || key == "data_dir") return p;
  return std::filesystem::path(get("data_dir")) / p;
}

void Config::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write(out);
}

TrainConfig to_train_config(const Config& config) {
  TrainConfig tc;
  try {
    tc.objective = parse_objective(config.get("objective"));
    tc.mode = parse_update_mode(config.get("mode"));
    tc.init = parse_init_kind(config.get("init"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  tc.iterations = config.get_size("iterations");
  tc.phase_switch = config.get_optional_size("phase_switch");
  tc.epsilon = config.get_double("epsilon");
  tc.target_loss = config.get_double("target_loss");
  tc.skip_ratio = config.get_size("skip_ratio");
  tc.k = config.get_double("k");
  tc.hidden = config.get_size("H");
  tc.seed = config.get_u64("seed");
  tc.log_every = config.get_size("log_every");
  tc.audit_every = config.get_size("audit_every");
  tc.workers = config.get_size("workers");
  tc.validate();
  return tc;
}

}  // namespace tropicnet
