#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "tropicnet/data.hpp"
#include "tropicnet/errors.hpp"

using namespace tropicnet;
namespace fs = std::filesystem;

namespace {

const std::string kData = TROPICNET_TEST_DATA_DIR;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tropicnet_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 2 images of 2x2 and their labels.
std::vector<unsigned char> tiny_images() {
  return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 7, 128, 1, 2, 3, 4};
}
std::vector<unsigned char> tiny_labels() { return {0, 0, 8, 1, 0, 0, 0, 2, 1, 0}; }

std::size_t parse_error_position(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.position();
  }
  FAIL("expected ParseError");
  return 0;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("tiny IDX fixture parses and round-trips") {
    const auto img = temp_path("tiny-images"), lab = temp_path("tiny-labels");
    write_bytes(img, tiny_images());
    write_bytes(lab, tiny_labels());
    const Dataset d = load_idx(img, lab);
    CHECK(d.size() == 2);
    CHECK(d.features() == 4);
    CHECK(d.classes == 2);
    CHECK(d.y == std::vector<std::size_t>{1, 0});
    CHECK(d.x.data() == std::vector<double>{0, 255, 7, 128, 1, 2, 3, 4});
    const auto img2 = temp_path("tiny-images-2"), lab2 = temp_path("tiny-labels-2");
    write_idx(img2, lab2, d, 2, 2);
    CHECK(read_all(img2) == tiny_images());
    CHECK(read_all(lab2) == tiny_labels());
  }

  TEST_CASE("IDX errors carry byte offsets") {
    const auto img = temp_path("bad-images"), lab = temp_path("bad-labels");
    write_bytes(lab, tiny_labels());
    auto bytes = tiny_images();
    bytes[3] = 0x04;
    write_bytes(img, bytes);
    CHECK(parse_error_position([&] { load_idx(img, lab); }) == 0);

    bytes = tiny_images();
    bytes.resize(20);
    write_bytes(img, bytes);
    CHECK(parse_error_position([&] { load_idx(img, lab); }) == 20);

    write_bytes(img, {0, 0, 8, 3, 0, 0});
    CHECK(parse_error_position([&] { load_idx(img, lab); }) == 6);

    write_bytes(img, tiny_images());
    auto labels = tiny_labels();
    labels[7] = 3;
    write_bytes(lab, labels);
    CHECK(parse_error_position([&] { load_idx(img, lab); }) == 4);
  }

  TEST_CASE("bundled MNIST subset agrees with a direct byte read") {
    const fs::path img = kData + "/mnist5k-images-idx3-ubyte", lab = kData + "/mnist5k-labels-idx1-ubyte";
    const Dataset d = load_idx(img, lab);
    CHECK(d.size() == 5000);
    CHECK(d.features() == 784);
    CHECK(d.classes == 10);
    const auto raw = read_all(img);
    const auto raw_labels = read_all(lab);
    for (std::size_t n = 0; n < 100; ++n) {
      for (std::size_t p = 0; p < 784; ++p) REQUIRE(d.x(n, p) == raw[16 + n * 784 + p]);
      REQUIRE(d.y[n] == raw_labels[8 + n]);
    }
  }

  TEST_CASE("iris CSV") {
    const Dataset d = load_iris_csv(kData + "/iris.csv");
    CHECK(d.size() == 150);
    CHECK(d.features() == 4);
    CHECK(d.classes == 3);
    CHECK(d.class_names == std::vector<std::string>{"setosa", "versicolor", "virginica"});
    CHECK(std::count(d.y.begin(), d.y.end(), 2u) == 50);
    const auto path = temp_path("iris-roundtrip.csv");
    write_iris_csv(path, d);
    const Dataset back = load_iris_csv(path);
    CHECK(back.x == d.x);
    CHECK(back.y == d.y);
    CHECK(back.class_names == d.class_names);
  }

  TEST_CASE("iris CSV errors carry line numbers") {
    const auto path = temp_path("iris-bad.csv");
    std::ofstream(path) << "a,b,label\n1,2,x\n3,oops,y\n";
    CHECK(parse_error_position([&] { load_iris_csv(path); }) == 3);
    std::ofstream(path) << "1,2,x\n3,4,5,y\n";
    CHECK(parse_error_position([&] { load_iris_csv(path); }) == 2);
  }

  TEST_CASE("split") {
    const Dataset d = load_iris_csv(kData + "/iris.csv");
    const auto [train, test] = split(d, 0.7, 42);
    CHECK(train.size() == 105);
    CHECK(test.size() == 45);
    std::vector<std::vector<double>> all, parts;
    for (std::size_t n = 0; n < d.size(); ++n) all.emplace_back(d.sample(n).begin(), d.sample(n).end());
    for (const Dataset* s : {&train, &test}) {
      for (std::size_t n = 0; n < s->size(); ++n) {
        std::vector<double> row(s->sample(n).begin(), s->sample(n).end());
        row.push_back(static_cast<double>(s->y[n]));
        parts.push_back(row);
      }
    }
    for (std::size_t n = 0; n < d.size(); ++n) all[n].push_back(static_cast<double>(d.y[n]));
    std::sort(all.begin(), all.end());
    std::sort(parts.begin(), parts.end());
    CHECK(all == parts);
    const auto again = split(d, 0.7, 42);
    CHECK(again.first.x == train.x);
    CHECK(!(split(d, 0.7, 43).first.x == train.x));
    CHECK_THROWS_AS(split(d, 1.0, 0), InvalidArgument);
  }

  TEST_CASE("normalization") {
    Dataset d;
    d.x = Matrix(1, 3, {0, 128, 255});
    d.y = {0};
    d.classes = 1;
    const Dataset u = normalize(d, Normalization::unit_byte);
    CHECK(u.x(0, 2) == 1.0);
    CHECK(u.x(0, 1) == doctest::Approx(128.0 / 255.0));
    CHECK(normalize(d, Normalization::none).x == d.x);
    CHECK_THROWS_AS(normalize(u, Normalization::unit_byte), InvalidArgument);
    CHECK(parse_normalization("unit_byte") == Normalization::unit_byte);
  }

  TEST_CASE("feature selection and subsets") {
    const auto grid = pixel_grid(28, 28, 3, 4);
    CHECK(grid.size() == 64);
    CHECK(grid.front() == 4 * 28 + 4);
    CHECK(grid.back() == 25 * 28 + 25);
    Dataset d;
    d.x = Matrix(2, 3, {1, 2, 3, 4, 5, 6});
    d.y = {0, 1};
    d.classes = 2;
    const std::vector<std::size_t> cols{2, 0};
    CHECK(select_features(d, cols).x == Matrix(2, 2, {3, 1, 6, 4}));
    const std::vector<std::size_t> rows{1};
    CHECK(subset(d, rows).y == std::vector<std::size_t>{1});
    const std::vector<std::size_t> bad{2};
    CHECK_THROWS_AS(subset(d, bad), IndexError);
    CHECK(sample_subset(d, 2, 0).size() == 2);
  }

  TEST_CASE("validate") {
    Dataset d;
    d.x = Matrix(1, 1, std::nan(""));
    d.y = {0};
    d.classes = 1;
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    d.x(0, 0) = 1.0;
    d.y = {1};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
  }
}
