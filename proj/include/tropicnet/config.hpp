#ifndef TROPICNET_CONFIG_HPP
#define TROPICNET_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tropicnet/trainer.hpp"

namespace tropicnet {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Flat key=value configuration with a fixed set of known keys. Lines starting
/// with '#' and blank lines are ignored. Unknown keys are rejected.
class Config {
 public:
  Config();

  static const std::vector<ConfigKey>& schema();

  void set(const std::string& key, const std::string& value);
  /// "key=value"
  void apply_override(const std::string& assignment);
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& source = "<text>");

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Empty or "auto" maps to nullopt.
  std::optional<std::size_t> get_optional_size(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;  // relative paths resolve against data_dir

  /// Every key in name order, one "key=value" per line.
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

TrainConfig to_train_config(const Config& config);

}  // namespace tropicnet

#endif  // TROPICNET_CONFIG_HPP
