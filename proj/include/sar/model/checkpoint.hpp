#pragma once

#include "sar/numcore/tensor.hpp"

#include <filesystem>
#include <vector>

namespace sar::model {

// Binary parameter container, all integers and floats little-endian:
//   magic    8 bytes  "SARCKPT\0"
//   version  u32      1
//   count    u64      number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8)
//     rank     u32 (2), dims u64[rank]
//     values   f64[product(dims)], row-major
inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'R', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::vector<nc::NamedTensor>& tensors);
// Throws LoadError on I/O failure, bad magic/version or truncation.
std::vector<nc::NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace sar::model
