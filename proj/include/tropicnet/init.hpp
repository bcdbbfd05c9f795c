#ifndef TROPICNET_INIT_HPP
#define TROPICNET_INIT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tropicnet/data.hpp"
#include "tropicnet/model.hpp"

namespace tropicnet {

enum class InitKind { structured, gaussian, uniform, glorot };

InitKind parse_init_kind(const std::string& name);
std::string to_string(InitKind kind);

struct InitSpec {
  InitKind kind = InitKind::structured;
  double k = 4.0;
  std::optional<std::vector<std::size_t>> anchors;  // structured only
  std::uint64_t seed = 0;
};

struct LmmDims {
  std::size_t features;
  std::size_t hidden;
  std::size_t classes;
};

/// Interpolating initialization: every hidden neuron is a pyramid of slope k
/// centred on one training sample, voting +k for that sample's class and -k
/// for the others. Anchors are drawn without replacement from `seed`.
LmmModel structured_init(const Dataset& data, std::size_t hidden, double k, std::uint64_t seed);

/// Same construction with explicit anchor sample indices (must be distinct).
LmmModel structured_init(const Dataset& data, std::span<const std::size_t> anchors, double k);

/// i.i.d. N(0, k^2) effective weights.
LmmModel gaussian_init(const LmmDims& dims, double k, std::uint64_t seed);

/// i.i.d. U(-k, k) effective weights.
LmmModel uniform_init(const LmmDims& dims, double k, std::uint64_t seed);

/// Entries ~ U(-a, a) with a = sqrt(6 / (P + C)).
ZeroHiddenModel glorot_uniform_init(std::size_t classes, std::size_t features, std::uint64_t seed);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

LmmModel make_lmm(const InitSpec& spec, const Dataset& data, std::size_t hidden);

}  // namespace tropicnet

#endif  // TROPICNET_INIT_HPP
