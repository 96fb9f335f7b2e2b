#ifndef VIGAN_DIFFCORE_CHECKPOINT_H_
#define VIGAN_DIFFCORE_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vigan/diffcore/tensor.h"

namespace vigan::diff {

// Parameter checkpoint ("VGNP"):
//   "VGNP" | u32 version | u32 count |
//   count x ( u32 name_len | name bytes | u32 rank | rank x u64 dim | f64 data )
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::vector<std::uint8_t> EncodeCheckpoint(const NamedTensors& tensors);
NamedTensors DecodeCheckpoint(std::span<const std::uint8_t> bytes);

void SaveCheckpoint(const NamedTensors& tensors, const std::string& path);
NamedTensors LoadCheckpoint(const std::string& path);

// Copies values from `source` into the same-named tensors of `target`.
// Missing names or shape mismatches raise.
void AssignFrom(const NamedTensors& source, NamedTensors& target);

}  // namespace vigan::diff

#endif  // VIGAN_DIFFCORE_CHECKPOINT_H_
