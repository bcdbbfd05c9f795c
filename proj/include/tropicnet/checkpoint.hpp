#ifndef TROPICNET_CHECKPOINT_HPP
#define TROPICNET_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <variant>

#include "tropicnet/model.hpp"

namespace tropicnet {

// Binary little-endian layout:
//   "TNET" | u32 version | u8 kind (0 = LMM, 1 = zero-hidden)
//   then per tensor: u32 rank | u32 dims[rank] | f64 payload (row-major)
// LMM stores w0 [2P], W1 [2P, H], W2 [H, C]; zero-hidden stores W [C, P].

inline constexpr std::uint32_t kCheckpointVersion = 1;

using AnyModel = std::variant<LmmModel, ZeroHiddenModel>;

void write_checkpoint(std::ostream& out, const AnyModel& model);
AnyModel read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_checkpoint(const std::filesystem::path& path);

/// Throws ParseError when the file holds a zero-hidden model.
LmmModel load_lmm_checkpoint(const std::filesystem::path& path);

}  // namespace tropicnet

#endif  // TROPICNET_CHECKPOINT_HPP
