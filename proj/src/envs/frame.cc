#include "vigan/envs/frame.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "vigan/common/binary_io.h"
#include "vigan/common/error.h"

namespace vigan::envs {

std::uint64_t HashFrame(const Frame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : frame.pixels) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void AppendNormalizedChw(const Frame& frame, std::vector<double>& out) {
  const std::size_t base = out.size();
  const std::size_t plane = static_cast<std::size_t>(frame.width * frame.height);
  out.resize(base + frame.pixels.size());
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < frame.channels; ++c) {
      out[base + static_cast<std::size_t>(c) * plane + i] =
          NormalizePixel(frame.pixels[i * static_cast<std::size_t>(frame.channels) + static_cast<std::size_t>(c)]);
    }
  }
}

void WritePpm(const Frame& frame, const std::string& path) {
  if (frame.channels != 1 && frame.channels != 3) {
    throw ValueError("ppm export supports 1 or 3 channels, got " + std::to_string(frame.channels));
  }
  std::string header = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                       "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<std::size_t>(frame.width * frame.height * 3));
  for (std::size_t i = 0; i < static_cast<std::size_t>(frame.width * frame.height); ++i) {
    for (int c = 0; c < 3; ++c) {
      bytes.push_back(frame.pixels[i * static_cast<std::size_t>(frame.channels) +
                                   static_cast<std::size_t>(frame.channels == 3 ? c : 0)]);
    }
  }
  WriteFileBytes(path, bytes);
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string HeaderToken(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                        const std::string& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw FormatError(FormatError::Kind::kMalformed, "malformed PPM header in " + path);
  return tok;
}

int HeaderInt(const std::vector<std::uint8_t>& bytes, std::size_t& pos, const std::string& path) {
  const std::string tok = HeaderToken(bytes, pos, path);
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw FormatError(FormatError::Kind::kMalformed,
                        "malformed PPM header in " + path + ": '" + tok + "'");
    }
  }
  return std::stoi(tok);
}

}  // namespace

Frame ReadPpm(const std::string& path, int channels) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError(FormatError::Kind::kBadMagic, "malformed PPM header in " + path +
                                                        ": expected P6 magic");
  }
  std::size_t pos = 2;
  const int w = HeaderInt(bytes, pos, path);
  const int h = HeaderInt(bytes, pos, path);
  const int maxval = HeaderInt(bytes, pos, path);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw FormatError(FormatError::Kind::kMalformed,
                      "malformed PPM header in " + path + ": unsupported geometry or maxval");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(FormatError::Kind::kMalformed, "malformed PPM header in " + path);
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < 3 * n) {
    throw FormatError(FormatError::Kind::kTruncated, "truncated PPM pixel data in " + path);
  }
  if (channels != 1 && channels != 3) throw ValueError("ppm import supports 1 or 3 channels");
  Frame frame(w, h, channels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = bytes.data() + pos + 3 * i;
    if (channels == 3) {
      for (int c = 0; c < 3; ++c) frame.pixels[3 * i + static_cast<std::size_t>(c)] = px[c];
    } else {
      frame.pixels[i] = static_cast<std::uint8_t>((299u * px[0] + 587u * px[1] + 114u * px[2] + 500u) / 1000u);
    }
  }
  return frame;
}

}  // namespace vigan::envs
