#ifndef VIGAN_COMMON_BINARY_IO_H_
#define VIGAN_COMMON_BINARY_IO_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vigan/common/error.h"

namespace vigan {

// Little-endian encoder into an in-memory buffer.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(v); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void F64s(std::span<const double> values);
  void Raw(std::span<const std::uint8_t> data);
  void Tag(std::string_view tag);
  // u32 byte length followed by the bytes.
  void String(std::string_view s);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bounds-checked little-endian decoder. Reading past the end raises
// FormatError(kTruncated).
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  void F64s(std::span<double> out);
  std::span<const std::uint8_t> Raw(std::size_t n);
  std::string String();

  std::size_t remaining() const { return data_.size() - pos_; }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  void Need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace vigan

#endif  // VIGAN_COMMON_BINARY_IO_H_
