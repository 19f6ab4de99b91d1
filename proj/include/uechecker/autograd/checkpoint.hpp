#pragma once

// Checkpoint container, version 1. All integers little-endian.
//
//   magic      "UECK"
//   u32        version
//   u32        entry count, then per entry: str key, str value
//   u32        tensor count, then per tensor:
//                str name, u8 dtype (0 = f32, 1 = f64), u32 rank,
//                u64 dims[rank], raw element data
//
// str is a u32 byte length followed by the bytes. Entries carry text
// metadata (model config, vocabulary, optimizer step); tensors carry
// parameters, optimizer moments and normalization statistics.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace uechecker::ag {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> shape;
  bool f64 = false;
  std::vector<float> f32_data;
  std::vector<double> f64_data;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::map<std::string, std::string> entries;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
  void add_f32(const std::string& name, std::vector<std::uint64_t> shape, std::vector<float> data);
  void add_f64(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> data);
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uechecker::ag
