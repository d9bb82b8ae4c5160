#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmloco/numerics/tensor.hpp"

namespace mmloco::numerics {

// Named-tensor container with a little-endian binary layout:
//
//   magic "WAQ1"
//   per record: u32 name length, name bytes, u32 rank,
//               u64 dims[rank], f64 values[prod(dims)]
//
// Integers and RNG words travel as raw 64-bit payloads inside f64 slots; the
// store never does arithmetic on them, so round trips are bit-exact.
class Checkpoint {
 public:
  void put(const std::string& name, Tensor t);
  void put_scalar(const std::string& name, double v);
  void put_u64(const std::string& name, std::uint64_t v);
  void put_u64s(const std::string& name, const std::vector<std::uint64_t>& v);

  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  double get_scalar(const std::string& name) const;
  std::uint64_t get_u64(const std::string& name) const;
  std::vector<std::uint64_t> get_u64s(const std::string& name) const;

  std::vector<std::string> names() const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  // Records keep insertion order so identical state serializes identically.
  std::vector<std::string> order_;
  std::map<std::string, Tensor> records_;
};

}  // namespace mmloco::numerics
