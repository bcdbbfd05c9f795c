#include "tropicnet/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tropicnet/errors.hpp"

namespace tropicnet {
namespace {

constexpr std::array<char, 4> kMagic = {'T', 'N', 'E', 'T'};
constexpr std::uint32_t kMaxDim = 1u << 28;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>(bits >> (8 * k));
  out.write(b, 8);
}

void put_tensor(std::ostream& out, std::initializer_list<std::size_t> dims, std::span<const double> payload) {
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::size_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : payload) put_f64(out, v);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ParseError("checkpoint: truncated", offset_ + in_.gcount());
    offset_ += n;
  }

  std::uint8_t u8() {
    char c;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
  }

  double f64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[k];
    return std::bit_cast<double>(bits);
  }

  std::vector<std::size_t> header(std::uint32_t rank, const char* name) {
    const std::size_t at = offset_;
    if (u32() != rank) throw ParseError(std::string("checkpoint: tensor ") + name + " has the wrong rank", at);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) {
      const std::size_t pos = offset_;
      d = u32();
      if (d == 0 || d > kMaxDim) throw ParseError(std::string("checkpoint: bad dimension in ") + name, pos);
    }
    return dims;
  }

  void payload(std::span<double> dst) {
    for (double& v : dst) v = f64();
  }

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const AnyModel& model) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  if (const auto* lmm = std::get_if<LmmModel>(&model)) {
    lmm->validate();
    out.put(0);
    put_tensor(out, {lmm->w0.size()}, lmm->w0);
    put_tensor(out, {lmm->w1.rows(), lmm->w1.cols()}, lmm->w1.data());
    put_tensor(out, {lmm->w2.rows(), lmm->w2.cols()}, lmm->w2.data());
  } else {
    const auto& zh = std::get<ZeroHiddenModel>(model);
    out.put(1);
    put_tensor(out, {zh.w.rows(), zh.w.cols()}, zh.w.data());
  }
  if (!out) throw InvalidArgument("checkpoint: write failed");
}

AnyModel read_checkpoint(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw ParseError("checkpoint: bad magic", 0);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
  const std::uint8_t kind = r.u8();
  if (kind == 0) {
    LmmModel m;
    const auto d0 = r.header(1, "w0");
    m.w0.resize(d0[0]);
    r.payload(m.w0);
    const auto d1 = r.header(2, "W1");
    m.w1 = Matrix(d1[0], d1[1]);
    r.payload(m.w1.data());
    const auto d2 = r.header(2, "W2");
    m.w2 = Matrix(d2[0], d2[1]);
    r.payload(m.w2.data());
    try {
      m.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("checkpoint: ") + e.what(), r.offset());
    }
    return m;
  }
  if (kind == 1) {
    ZeroHiddenModel m;
    const auto d = r.header(2, "W");
    m.w = Matrix(d[0], d[1]);
    r.payload(m.w.data());
    return m;
  }
  throw ParseError("checkpoint: unknown model kind " + std::to_string(kind), 8);
}

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_checkpoint(out, model);
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return read_checkpoint(in);
}

LmmModel load_lmm_checkpoint(const std::filesystem::path& path) {
  AnyModel model = load_checkpoint(path);
  if (auto* lmm = std::get_if<LmmModel>(&model)) return std::move(*lmm);
  throw ParseError(path.string() + ": checkpoint holds a zero-hidden model", 8);
}

}  // namespace tropicnet
