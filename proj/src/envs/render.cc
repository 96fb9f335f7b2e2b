#include "vigan/envs/render.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::envs {

std::string_view RenderModeName(RenderMode mode) {
  switch (mode) {
    case RenderMode::kInjective:
      return "injective";
    case RenderMode::kOccluding:
      return "occluding";
    case RenderMode::kAxisDegenerate:
      return "axis_degenerate";
  }
  return "unknown";
}

RenderMode ParseRenderMode(std::string_view name) {
  if (name == "injective") return RenderMode::kInjective;
  if (name == "occluding") return RenderMode::kOccluding;
  if (name == "axis_degenerate") return RenderMode::kAxisDegenerate;
  throw ConfigError("unknown render mode '" + std::string(name) + "'");
}

void RenderMap::Validate() const {
  if (width < 8 || height < 8 || width > 1024 || height > 1024) {
    throw ConfigError("render size must be within [8, 1024], got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw ConfigError("render channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (!(crop_shake_max >= 0.0 && crop_shake_max <= 0.05)) {
    throw ConfigError("crop_shake_max must be in [0, 0.05], got " + std::to_string(crop_shake_max));
  }
  if (!(0.0 <= occluder_x0 && occluder_x0 < occluder_x1 && occluder_x1 <= 1.0 &&
        0.0 <= occluder_y0 && occluder_y0 < occluder_y1 && occluder_y1 <= 1.0)) {
    throw ConfigError("occluder rectangle must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1");
  }
}

std::uint8_t RoundToByte(double v) {
  const double r = std::floor(std::abs(v) + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v < 0 ? -r : r, 0.0, 255.0));
}

Canvas::Canvas(int width, int height, int channels, const Color& background)
    : width_(width), height_(height), channels_(channels) {
  values_.resize(static_cast<std::size_t>(width * height * channels));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) SetPixel(x, y, background);
  }
}

namespace {

double Luminance(const Color& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

}  // namespace

template <typename F>
void Canvas::Blend(double x0, double y0, double x1, double y1, const Color& color, F coverage) {
  const int px0 = std::max(0, static_cast<int>(std::floor(x0)) - 1);
  const int py0 = std::max(0, static_cast<int>(std::floor(y0)) - 1);
  const int px1 = std::min(width_, static_cast<int>(std::ceil(x1)) + 1);
  const int py1 = std::min(height_, static_cast<int>(std::ceil(y1)) + 1);
  const double gray = Luminance(color);
  for (int py = py0; py < py1; ++py) {
    for (int px = px0; px < px1; ++px) {
      const double a = std::clamp(coverage(px + 0.5, py + 0.5), 0.0, 1.0);
      if (a <= 0.0) continue;
      double* v = &values_[static_cast<std::size_t>((py * width_ + px) * channels_)];
      if (channels_ == 1) {
        v[0] += a * (gray - v[0]);
      } else {
        for (int c = 0; c < 3; ++c) v[c] += a * (color[static_cast<std::size_t>(c)] - v[c]);
      }
    }
  }
}

void Canvas::FillDisk(double cx, double cy, double radius, const Color& color) {
  Blend(cx - radius, cy - radius, cx + radius, cy + radius, color, [&](double x, double y) {
    return radius - std::hypot(x - cx, y - cy) + 0.5;
  });
}

void Canvas::FillBox(double cx, double cy, double half_w, double half_h, const Color& color) {
  Blend(cx - half_w, cy - half_h, cx + half_w, cy + half_h, color, [&](double x, double y) {
    const double dx = std::abs(x - cx) - half_w;
    const double dy = std::abs(y - cy) - half_h;
    const double outside = std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
    const double inside = std::min(std::max(dx, dy), 0.0);
    return 0.5 - (outside + inside);
  });
}

void Canvas::FillSegment(double x0, double y0, double x1, double y1, double half_width,
                         const Color& color) {
  const double ex = x1 - x0;
  const double ey = y1 - y0;
  const double len2 = ex * ex + ey * ey;
  Blend(std::min(x0, x1) - half_width, std::min(y0, y1) - half_width,
        std::max(x0, x1) + half_width, std::max(y0, y1) + half_width, color,
        [&](double x, double y) {
          double t = len2 > 0 ? ((x - x0) * ex + (y - y0) * ey) / len2 : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          return half_width - std::hypot(x - (x0 + t * ex), y - (y0 + t * ey)) + 0.5;
        });
}

void Canvas::FillPixels(int x0, int y0, int x1, int y1, const Color& color) {
  for (int y = std::max(0, y0); y < std::min(height_, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(width_, x1); ++x) SetPixel(x, y, color);
  }
}

void Canvas::SetPixel(int x, int y, const Color& color) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  double* v = &values_[static_cast<std::size_t>((y * width_ + x) * channels_)];
  if (channels_ == 1) {
    v[0] = Luminance(color);
  } else {
    for (int c = 0; c < 3; ++c) v[c] = color[static_cast<std::size_t>(c)];
  }
}

Frame Canvas::ToFrame() const {
  Frame frame(width_, height_, channels_);
  for (std::size_t i = 0; i < values_.size(); ++i) frame.pixels[i] = RoundToByte(values_[i]);
  return frame;
}

Frame ResizeAndCrop(const Frame& frame, const CropRect& rect, int out_w, int out_h) {
  if (rect.width <= 0 || rect.height <= 0 || out_w <= 0 || out_h <= 0) {
    throw ValueError("resize_and_crop: empty crop rectangle or output size");
  }
  if (rect.x < 0 || rect.y < 0 || rect.x + rect.width > frame.width ||
      rect.y + rect.height > frame.height) {
    throw ValueError("resize_and_crop: crop rectangle outside the frame");
  }
  Frame out(out_w, out_h, frame.channels);
  const double sx_scale = static_cast<double>(rect.width) / out_w;
  const double sy_scale = static_cast<double>(rect.height) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    const double sy = std::clamp((oy + 0.5) * sy_scale - 0.5, 0.0, rect.height - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, rect.height - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double sx = std::clamp((ox + 0.5) * sx_scale - 0.5, 0.0, rect.width - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, rect.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < frame.channels; ++c) {
        const double p00 = frame.at(rect.x + x0, rect.y + y0, c);
        const double p01 = frame.at(rect.x + x1, rect.y + y0, c);
        const double p10 = frame.at(rect.x + x0, rect.y + y1, c);
        const double p11 = frame.at(rect.x + x1, rect.y + y1, c);
        const double top = p00 + fx * (p01 - p00);
        const double bottom = p10 + fx * (p11 - p10);
        out.at(ox, oy, c) = RoundToByte(top + fy * (bottom - top));
      }
    }
  }
  return out;
}

Frame CropShake(const Frame& frame, double max_frac, Rng& rng) {
  if (!(max_frac >= 0.0 && max_frac <= 0.25)) {
    throw ValueError("crop_shake: max_frac must be in [0, 0.25], got " + std::to_string(max_frac));
  }
  const int left = static_cast<int>(std::floor(rng.Uniform(0.0, max_frac) * frame.width));
  const int right = static_cast<int>(std::floor(rng.Uniform(0.0, max_frac) * frame.width));
  const int top = static_cast<int>(std::floor(rng.Uniform(0.0, max_frac) * frame.height));
  const int bottom = static_cast<int>(std::floor(rng.Uniform(0.0, max_frac) * frame.height));
  if (left == 0 && right == 0 && top == 0 && bottom == 0) return frame;
  const CropRect rect{left, top, frame.width - left - right, frame.height - top - bottom};
  return ResizeAndCrop(frame, rect, frame.width, frame.height);
}

}  // namespace vigan::envs
