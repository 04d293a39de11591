#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "ktnext/error.hpp"
#include "ktnext/kt_sampling.hpp"

namespace ktnext {

namespace {

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(buf[off + i])} << (8 * i);
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return buf;
}

void write_all(const std::filesystem::path& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void check_magic(const std::string& buf, const char* magic, const std::filesystem::path& path) {
  if (buf.size() < 4) throw Error(ErrorCode::Truncated, path.string() + ": shorter than magic");
  if (std::memcmp(buf.data(), magic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + ": expected " + magic);
  }
}

std::uint64_t checked_count(std::initializer_list<std::uint32_t> dims, const std::filesystem::path& path) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d == 0) throw Error(ErrorCode::DimensionOverflow, path.string() + ": zero dimension");
    n *= d;
    if (n > kMaxElements) throw Error(ErrorCode::DimensionOverflow, path.string() + ": dimensions too large");
  }
  return n;
}

void check_payload(std::size_t have, std::uint64_t need, const std::filesystem::path& path) {
  if (have < need) throw Error(ErrorCode::Truncated, path.string() + ": payload shorter than header claims");
  if (have > need) throw Error(ErrorCode::Malformed, path.string() + ": trailing bytes after payload");
}

std::uint32_t to_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::DimensionOverflow, "dimension does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_sequence(const std::filesystem::path& path, const ComplexVolume& v) {
  std::string buf;
  buf.reserve(16 + 8 * v.size());
  buf.append("CKT1", 4);
  put_u32(buf, to_u32(v.t_frames()));
  put_u32(buf, to_u32(v.rows()));
  put_u32(buf, to_u32(v.cols()));
  for (const auto& z : v.data()) {
    for (double part : {z.real(), z.imag()}) {
      const auto f = static_cast<float>(part);
      if (!std::isfinite(f)) throw Error(ErrorCode::NumericFailure, "value overflows single precision");
      put_u32(buf, std::bit_cast<std::uint32_t>(f));
    }
  }
  write_all(path, buf);
}

ComplexVolume load_sequence(const std::filesystem::path& path, Domain domain) {
  const std::string buf = read_all(path);
  check_magic(buf, "CKT1", path);
  if (buf.size() < 16) throw Error(ErrorCode::Truncated, path.string() + ": incomplete header");
  const std::uint32_t t = get_u32(buf, 4), y = get_u32(buf, 8), x = get_u32(buf, 12);
  const std::uint64_t n = checked_count({t, y, x}, path);
  check_payload(buf.size() - 16, 8 * n, path);
  std::vector<cplx> data(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const float re = std::bit_cast<float>(get_u32(buf, 16 + 8 * i));
    const float im = std::bit_cast<float>(get_u32(buf, 20 + 8 * i));
    data[i] = cplx{re, im};
  }
  return ComplexVolume(t, y, x, domain, std::move(data));
}

void save_mask(const std::filesystem::path& path, const SamplingMask& mask) {
  std::string buf;
  buf.append("CKM1", 4);
  put_u32(buf, to_u32(mask.t_frames()));
  put_u32(buf, to_u32(mask.cols()));
  for (auto b : mask.bits()) buf.push_back(static_cast<char>(b));
  write_all(path, buf);
}

SamplingMask load_mask(const std::filesystem::path& path) {
  const std::string buf = read_all(path);
  check_magic(buf, "CKM1", path);
  if (buf.size() < 12) throw Error(ErrorCode::Truncated, path.string() + ": incomplete header");
  const std::uint32_t t = get_u32(buf, 4), x = get_u32(buf, 8);
  const std::uint64_t n = checked_count({t, x}, path);
  check_payload(buf.size() - 12, n, path);
  std::vector<std::uint8_t> bits(buf.begin() + 12, buf.end());
  for (auto b : bits) {
    if (b > 1) throw Error(ErrorCode::Malformed, path.string() + ": mask byte not 0/1");
  }
  return SamplingMask(t, x, std::move(bits));
}

}  // namespace ktnext
