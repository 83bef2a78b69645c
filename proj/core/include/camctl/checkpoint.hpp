#pragma once

#include <filesystem>
#include <iosfwd>

#include "camctl/network.hpp"

namespace camctl {

/// Binary layout (all integers little-endian):
///   magic "CAMCTLCK" | u32 version | u32 round | u32 n | n bytes network config (JSON)
///   | u32 tensor_count | per tensor: u32 name_len, name, u32 rank, u32 dims[rank],
///   f32 values[prod(dims)] (column-major) | u64 FNV-1a of everything before it.
/// Tensor order: per hidden layer (conv0..conv3, fc0, fc1) weight, bn.gamma,
/// bn.beta; then out.weight, out.bias; then per hidden layer bn.running_mean,
/// bn.running_var.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace camctl
