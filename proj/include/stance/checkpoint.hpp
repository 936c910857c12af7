#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "stance/model.hpp"

namespace stance {

// Binary layout, all integers little-endian:
//   "STNC1"
//   u32 vocabulary entries, then (u32 codepoint, u32 id) per entry
//   u32 hyperparameter count, then (u32 length + key, u32 length + value)
//   u32 tensor count, then per tensor: u16 name length + name, u8 rank,
//   u32 per dimension, f32 values
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[] = "STNC1";

void save_checkpoint(std::ostream& out, const ModelParams& params);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);

// Throws CheckpointError for a wrong magic, a truncated payload, unknown
// hyperparameters, or tensors that do not match the stored configuration.
ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace stance
