#include "tropicnet/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tropicnet/errors.hpp"

namespace tropicnet {
namespace {

template <class Draw>
LmmModel random_lmm(const LmmDims& dims, double k, std::uint64_t seed, Draw draw) {
  if (!(k > 0.0)) throw InvalidArgument("init: k must be positive");
  if (dims.features == 0 || dims.hidden == 0 || dims.classes < 2) throw InvalidArgument("init: bad dimensions");
  std::mt19937_64 rng(seed);
  LmmModel model{Vector(2 * dims.features), Matrix(2 * dims.features, dims.hidden),
                 Matrix(dims.hidden, dims.classes)};
  for (double& v : model.w0) v = draw(rng);
  for (double& v : model.w1.data()) v = draw(rng);
  for (double& v : model.w2.data()) v = draw(rng);
  return model;
}

}  // namespace

InitKind parse_init_kind(const std::string& name) {
  if (name == "structured") return InitKind::structured;
  if (name == "gaussian") return InitKind::gaussian;
  if (name == "uniform") return InitKind::uniform;
  if (name == "glorot") return InitKind::glorot;
  throw InvalidArgument("unknown init kind '" + name + "'");
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::structured: return "structured";
    case InitKind::gaussian: return "gaussian";
    case InitKind::uniform: return "uniform";
    case InitKind::glorot: return "glorot";
  }
  return "?";
}

LmmModel structured_init(const Dataset& data, std::span<const std::size_t> anchors, double k) {
  if (!(k > 0.0)) throw InvalidArgument("structured_init: k must be positive");
  if (anchors.empty()) throw InvalidArgument("structured_init: need at least one anchor");
  if (data.classes < 2) throw InvalidArgument("structured_init: need at least two classes");
  const std::set<std::size_t> distinct(anchors.begin(), anchors.end());
  if (distinct.size() != anchors.size()) throw InvalidArgument("structured_init: duplicate anchors");
  if (*distinct.rbegin() >= data.size()) throw InvalidArgument("structured_init: anchor out of range");

  const std::size_t features = data.features();
  const std::size_t hidden = anchors.size();
  LmmModel model{Vector(2 * features), Matrix(2 * features, hidden), Matrix(hidden, data.classes)};
  for (std::size_t p = 0; p < features; ++p) {
    model.w0[2 * p] = k;
    model.w0[2 * p + 1] = -k;
  }
  for (std::size_t h = 0; h < hidden; ++h) {
    const auto x = data.sample(anchors[h]);
    for (std::size_t p = 0; p < features; ++p) {
      model.w1(2 * p, h) = -k * x[p];
      model.w1(2 * p + 1, h) = k * x[p];
    }
    for (std::size_t d = 0; d < data.classes; ++d) model.w2(h, d) = d == data.y[anchors[h]] ? k : -k;
  }
  return model;
}

LmmModel structured_init(const Dataset& data, std::size_t hidden, double k, std::uint64_t seed) {
  if (hidden > data.size()) {
    throw InvalidArgument("structured_init: H = " + std::to_string(hidden) + " exceeds N = " +
                          std::to_string(data.size()));
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  perm.resize(hidden);
  return structured_init(data, perm, k);
}

LmmModel gaussian_init(const LmmDims& dims, double k, std::uint64_t seed) {
  std::normal_distribution<double> dist(0.0, k);
  return random_lmm(dims, k, seed, [&](std::mt19937_64& rng) { return dist(rng); });
}

LmmModel uniform_init(const LmmDims& dims, double k, std::uint64_t seed) {
  std::uniform_real_distribution<double> dist(-k, k);
  return random_lmm(dims, k, seed, [&](std::mt19937_64& rng) { return dist(rng); });
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ZeroHiddenModel glorot_uniform_init(std::size_t classes, std::size_t features, std::uint64_t seed) {
  if (classes < 2 || features == 0) throw InvalidArgument("glorot_uniform_init: bad dimensions");
  const double a = glorot_bound(features, classes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-a, a);
  ZeroHiddenModel model{Matrix(classes, features)};
  for (double& v : model.w.data()) v = dist(rng);
  return model;
}

LmmModel make_lmm(const InitSpec& spec, const Dataset& data, std::size_t hidden) {
  const LmmDims dims{data.features(), hidden, data.classes};
  switch (spec.kind) {
    case InitKind::structured:
      if (spec.anchors) return structured_init(data, *spec.anchors, spec.k);
      return structured_init(data, hidden, spec.k, spec.seed);
    case InitKind::gaussian: return gaussian_init(dims, spec.k, spec.seed);
    case InitKind::uniform: return uniform_init(dims, spec.k, spec.seed);
    case InitKind::glorot: break;
  }
  throw InvalidArgument("make_lmm: glorot initialization applies to zero-hidden models only");
}

}  // namespace tropicnet
