#include "vigan/diffcore/checkpoint.h"

#include <algorithm>

#include "vigan/common/binary_io.h"
#include "vigan/common/error.h"

namespace vigan::diff {

std::vector<std::uint8_t> EncodeCheckpoint(const NamedTensors& tensors) {
  ByteWriter w;
  w.Tag("VGNP");
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.String(name);
    w.U32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.U64(d);
    w.F64s(t.data());
  }
  return w.bytes();
}

NamedTensors DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "VGNP")) {
    throw FormatError(FormatError::Kind::kBadMagic, "not a VGNP checkpoint (bad magic)");
  }
  r.Raw(4);
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "VGNP version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t count = r.U32();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.String();
    const std::uint32_t rank = r.U32();
    Shape shape(rank);
    for (auto& d : shape) d = r.U64();
    const std::size_t n = NumElements(shape);
    if (n > r.remaining() / 8) {
      throw FormatError(FormatError::Kind::kTruncated,
                        "truncated payload in tensor '" + name + "'");
    }
    std::vector<double> data(n);
    r.F64s(data);
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.AtEnd()) {
    throw FormatError(FormatError::Kind::kMalformed, "trailing bytes after VGNP payload");
  }
  return out;
}

void SaveCheckpoint(const NamedTensors& tensors, const std::string& path) {
  WriteFileBytes(path, EncodeCheckpoint(tensors));
}

NamedTensors LoadCheckpoint(const std::string& path) {
  return DecodeCheckpoint(ReadFileBytes(path));
}

void AssignFrom(const NamedTensors& source, NamedTensors& target) {
  for (auto& [name, dst] : target) {
    auto it = std::find_if(source.begin(), source.end(),
                           [&](const auto& entry) { return entry.first == name; });
    if (it == source.end()) throw ValueError("checkpoint has no tensor named '" + name + "'");
    if (it->second.shape() != dst.shape()) {
      throw ShapeError("checkpoint tensor '" + name + "' has shape " +
                       ShapeString(it->second.shape()) + ", model expects " +
                       ShapeString(dst.shape()));
    }
    std::copy(it->second.data().begin(), it->second.data().end(), dst.data().begin());
  }
}

}  // namespace vigan::diff
