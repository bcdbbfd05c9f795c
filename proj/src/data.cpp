#include "tropicnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "tropicnet/errors.hpp"

namespace tropicnet {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw ParseError(path.string() + ": truncated header", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

void Dataset::validate() const {
  if (size() == 0) throw InvalidArgument("Dataset: no samples");
  if (y.size() != size()) throw InvalidArgument("Dataset: label count mismatch");
  for (std::size_t label : y) {
    if (label >= classes) throw InvalidArgument("Dataset: label out of range");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("Dataset: non-finite feature");
  }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);

  if (read_be32(img, 0, images) != kImageMagic) throw ParseError(images.string() + ": bad image magic", 0);
  const std::uint32_t count = read_be32(img, 4, images);
  const std::uint32_t rows = read_be32(img, 8, images);
  const std::uint32_t cols = read_be32(img, 12, images);
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t need = 16 + std::size_t{count} * pixels;
  if (img.size() < need) {
    throw ParseError(images.string() + ": truncated payload, expected " + std::to_string(need) + " bytes",
                     img.size());
  }

  if (read_be32(lab, 0, labels) != kLabelMagic) throw ParseError(labels.string() + ": bad label magic", 0);
  const std::uint32_t label_count = read_be32(lab, 4, labels);
  if (label_count != count) {
    throw ParseError(labels.string() + ": " + std::to_string(label_count) + " labels for " +
                         std::to_string(count) + " images",
                     4);
  }
  if (lab.size() < 8 + std::size_t{count}) throw ParseError(labels.string() + ": truncated payload", lab.size());

  Dataset data;
  data.x = Matrix(count, pixels);
  data.y.resize(count);
  std::size_t max_label = 0;
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* src = img.data() + 16 + n * pixels;
    auto row = data.x.row(n);
    for (std::size_t p = 0; p < pixels; ++p) row[p] = src[p];
    data.y[n] = lab[8 + n];
    max_label = std::max(max_label, data.y[n]);
  }
  data.classes = count == 0 ? 0 : max_label + 1;
  for (std::size_t c = 0; c < data.classes; ++c) data.class_names.push_back(std::to_string(c));
  return data;
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const Dataset& data, std::uint32_t rows, std::uint32_t cols) {
  if (std::size_t{rows} * cols != data.features()) throw InvalidArgument("write_idx: shape mismatch");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw InvalidArgument("write_idx: cannot open output");
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, rows);
  write_be32(img, cols);
  for (double v : data.x.data()) {
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) throw InvalidArgument("write_idx: feature is not a byte");
    img.put(static_cast<char>(static_cast<std::uint8_t>(v)));
  }
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t label : data.y) {
    if (label > 255) throw InvalidArgument("write_idx: label does not fit in a byte");
    lab.put(static_cast<char>(label));
  }
}

Dataset load_iris_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);

  std::vector<std::vector<double>> features;
  std::vector<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) throw ParseError(path.string() + ": expected features and a label", line_no);
    std::vector<double> row(fields.size() - 1);
    bool numeric = true;
    for (std::size_t j = 0; j + 1 < fields.size(); ++j) numeric = numeric && parse_double(fields[j], row[j]);
    if (!numeric) {
      if (features.empty() && names.empty()) continue;  // header
      throw ParseError(path.string() + ": malformed feature value", line_no);
    }
    if (width == 0) width = row.size();
    if (row.size() != width) throw ParseError(path.string() + ": inconsistent column count", line_no);
    if (fields.back().empty()) throw ParseError(path.string() + ": missing label", line_no);
    features.push_back(std::move(row));
    names.push_back(fields.back());
  }
  if (features.empty()) throw ParseError(path.string() + ": no samples", line_no);

  std::map<std::string, std::size_t> index;
  for (const auto& name : names) index.emplace(name, 0);
  Dataset data;
  for (auto& [name, id] : index) {
    id = data.class_names.size();
    data.class_names.push_back(name);
  }
  data.classes = data.class_names.size();
  data.x = Matrix(features.size(), width);
  data.y.resize(features.size());
  for (std::size_t n = 0; n < features.size(); ++n) {
    std::copy(features[n].begin(), features[n].end(), data.x.row(n).begin());
    data.y[n] = index.at(names[n]);
  }
  return data;
}

void write_iris_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("write_iris_csv: cannot open " + path.string());
  for (std::size_t j = 0; j < data.features(); ++j) out << "f" << j << ",";
  out << "label\n";
  out.precision(17);
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (double v : data.sample(n)) out << v << ",";
    out << (data.y[n] < data.class_names.size() ? data.class_names[data.y[n]] : std::to_string(data.y[n]))
        << "\n";
  }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.classes = data.classes;
  out.class_names = data.class_names;
  out.x = Matrix(indices.size(), data.features());
  out.y.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= data.size()) throw IndexError("subset: sample index out of range");
    const auto src = data.sample(indices[k]);
    std::copy(src.begin(), src.end(), out.x.row(k).begin());
    out.y[k] = data.y[indices[k]];
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("split: fraction must be in (0, 1)");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  const std::span<const std::size_t> all(perm);
  return {subset(data, all.first(n_train)), subset(data, all.subspan(n_train))};
}

Dataset sample_subset(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count > data.size()) throw InvalidArgument("sample_subset: not enough samples");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  perm.resize(count);
  return subset(data, perm);
}

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "unit_byte") return Normalization::unit_byte;
  throw InvalidArgument("unknown normalization '" + name + "'");
}

Dataset normalize(const Dataset& data, Normalization scheme) {
  if (scheme == Normalization::none) return data;
  for (double v : data.x.data()) {
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
      throw InvalidArgument("normalize(unit_byte): data is not byte-valued (already scaled?)");
    }
  }
  Dataset out = data;
  for (double& v : out.x.data()) v /= 255.0;
  return out;
}

Dataset select_features(const Dataset& data, std::span<const std::size_t> features) {
  Dataset out;
  out.classes = data.classes;
  out.class_names = data.class_names;
  out.y = data.y;
  out.x = Matrix(data.size(), features.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto src = data.sample(n);
    auto dst = out.x.row(n);
    for (std::size_t j = 0; j < features.size(); ++j) dst[j] = src[features[j]];
  }
  return out;
}

std::vector<std::size_t> pixel_grid(std::size_t rows, std::size_t cols, std::size_t stride,
                                    std::size_t offset) {
  if (stride == 0) throw InvalidArgument("pixel_grid: stride must be positive");
  std::vector<std::size_t> out;
  for (std::size_t r = offset; r < rows; r += stride) {
    for (std::size_t c = offset; c < cols; c += stride) out.push_back(r * cols + c);
  }
  return out;
}

}  // namespace tropicnet
