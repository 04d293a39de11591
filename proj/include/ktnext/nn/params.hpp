#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ktnext/nn/tensor.hpp"

namespace ktnext::nn {

/// Ordered, uniquely named collection of real arrays. Shapes are fixed when
/// an entry is added; values stay mutable.
class ParamStore {
 public:
  void add(std::string name, std::vector<std::size_t> dims, std::vector<double> values);
  void add(std::string name, std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t size() const noexcept { return entries_.size(); }
  /// Sum of element counts over all entries.
  std::size_t total_count() const noexcept;

  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  const std::vector<std::size_t>& dims(std::size_t i) const { return entries_.at(i).dims; }
  std::span<double> values(std::size_t i) { return entries_.at(i).values; }
  std::span<const double> values(std::size_t i) const { return entries_.at(i).values; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;

  /// Entry i viewed as a 4D tensor: rank 4 maps to [d0][d1][d2][d3], rank 1 to
  /// [1][d0][1][1], rank 0 to a single element.
  Tensor tensor(std::size_t i) const;

  /// Same names and shapes, all values zero.
  ParamStore zeros_like() const;
  bool same_layout(const ParamStore& other) const;

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  struct Entry {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> values;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

std::size_t parameter_count(const ParamStore& params);

/// KTNP checkpoint: "KTNP", u32 record count, then per record u16 name length,
/// name bytes, u8 rank, rank x u32 dims, little-endian f64 payload.
void save_params(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_params(const std::filesystem::path& path);

std::string encode_params(const ParamStore& params);
ParamStore decode_params(const std::string& bytes);

}  // namespace ktnext::nn
