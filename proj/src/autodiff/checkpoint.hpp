#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"

namespace s2g::ad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Flat name -> (shape, f64 payload) container. Byte layout is described in
/// docs/checkpoint_format.md; every integer and float is little-endian.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  std::string metadata;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
  const CheckpointEntry& at(const std::string& name) const;
  void put(std::string name, const Tensor& tensor);
  void put(std::string name, Shape shape, std::vector<double> values);
};

inline constexpr char kCheckpointMagic[8] = {'S', '2', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace s2g::ad
