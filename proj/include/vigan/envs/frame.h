#ifndef VIGAN_ENVS_FRAME_H_
#define VIGAN_ENVS_FRAME_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vigan::envs {

// Interleaved row-major u8 image: pixels[(y * width + x) * channels + c].
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w * h * c), fill) {}

  std::size_t size() const { return pixels.size(); }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  bool SameGeometry(const Frame& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// 64-bit FNV-1a over the pixel buffer.
std::uint64_t HashFrame(const Frame& frame);

// Appends the frame as planar CHW values scaled to [-1, 1].
void AppendNormalizedChw(const Frame& frame, std::vector<double>& out);
// Pixel value scaled to [-1, 1].
inline double NormalizePixel(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

// Binary PPM (P6). Single-channel frames are written with the gray value
// replicated into R, G and B.
void WritePpm(const Frame& frame, const std::string& path);
// Reads a P6 file. With `channels` == 1 the result is converted to gray by
// integer luminance, which is exact for replicated gray images.
Frame ReadPpm(const std::string& path, int channels = 3);

}  // namespace vigan::envs

#endif  // VIGAN_ENVS_FRAME_H_
