#include "ktnext/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "ktnext/error.hpp"

namespace ktnext::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

void ParamStore::add(std::string name, std::vector<std::size_t> dims, std::vector<double> values) {
  if (index_.count(name)) throw Error(ErrorCode::InvalidArgument, "duplicate parameter name " + name);
  if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "parameter name length out of range");
  }
  if (dims.size() > 4) throw Error(ErrorCode::InvalidArgument, "parameter rank above 4: " + name);
  for (auto d : dims) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "zero dimension in " + name);
  }
  if (values.size() != product(dims)) throw Error(ErrorCode::DimensionMismatch, "value count for " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(dims), std::move(values)});
}

void ParamStore::add(std::string name, std::vector<std::size_t> dims, double fill) {
  const std::size_t n = product(dims);
  add(std::move(name), std::move(dims), std::vector<double>(n, fill));
}

std::size_t ParamStore::total_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.values.size();
  return n;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "unknown parameter " + name);
  return it->second;
}

Tensor ParamStore::tensor(std::size_t i) const {
  const Entry& e = entries_.at(i);
  Shape s{};
  switch (e.dims.size()) {
    case 0: s = Shape{1, 1, 1, 1}; break;
    case 1: s = Shape{1, e.dims[0], 1, 1}; break;
    case 2: s = Shape{1, 1, e.dims[0], e.dims[1]}; break;
    case 3: s = Shape{1, e.dims[0], e.dims[1], e.dims[2]}; break;
    default: s = Shape{e.dims[0], e.dims[1], e.dims[2], e.dims[3]}; break;
  }
  return Tensor(s, e.values);
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& e : entries_) out.add(e.name, e.dims, 0.0);
  return out;
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || entries_[i].dims != other.entries_[i].dims) return false;
  }
  return true;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& va = a.entries_[i].values;
    const auto& vb = b.entries_[i].values;
    // bitwise, so NaN payloads and signed zeros compare as stored
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

std::size_t parameter_count(const ParamStore& params) { return params.total_count(); }

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw Error(ErrorCode::Truncated, "checkpoint ends mid-record");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_params(const ParamStore& params) {
  std::string buf("KTNP");
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(name.size()));
    buf += name;
    put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(params.dims(i).size()));
    for (auto d : params.dims(i)) {
      if (d > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::DimensionOverflow, name);
      put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
    }
    for (double v : params.values(i)) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  }
  return buf;
}

ParamStore decode_params(const std::string& bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::Truncated, "checkpoint shorter than magic");
  if (bytes.compare(0, 4, "KTNP") != 0) throw Error(ErrorCode::BadMagic, "expected KTNP checkpoint");
  Reader r(bytes);
  r.bytes(4);
  const auto count = r.get<std::uint32_t>();
  ParamStore out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = r.get<std::uint16_t>();
    std::string name = r.bytes(len);
    const auto rank = r.get<std::uint8_t>();
    if (rank > 4) throw Error(ErrorCode::Malformed, "record rank above 4: " + name);
    std::vector<std::size_t> dims;
    std::uint64_t n = 1;
    for (int d = 0; d < rank; ++d) {
      const auto v = r.get<std::uint32_t>();
      if (v == 0) throw Error(ErrorCode::DimensionOverflow, "zero dimension in " + name);
      n *= v;
      if (n > (std::uint64_t{1} << 32)) throw Error(ErrorCode::DimensionOverflow, "record too large: " + name);
      dims.push_back(v);
    }
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(r.get<std::uint64_t>());
    if (out.contains(name)) throw Error(ErrorCode::Malformed, "duplicate record " + name);
    out.add(std::move(name), std::move(dims), std::move(values));
  }
  if (!r.done()) throw Error(ErrorCode::Malformed, "trailing bytes after last record");
  return out;
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  const std::string buf = encode_params(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_params(buf);
}

}  // namespace ktnext::nn
