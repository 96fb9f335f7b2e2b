#ifndef VIGAN_ENVS_RENDER_H_
#define VIGAN_ENVS_RENDER_H_

#include <array>
#include <string_view>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/envs/frame.h"

namespace vigan::envs {

enum class RenderMode { kInjective, kOccluding, kAxisDegenerate };

std::string_view RenderModeName(RenderMode mode);
RenderMode ParseRenderMode(std::string_view name);

using Color = std::array<double, 3>;

// Fixed palette. Single-channel frames use the luminance of each color.
struct Palette {
  Color background{0, 0, 0};
  Color body{230, 80, 60};      // cart, point mass, grid agent, pendulum bob
  Color limb{70, 170, 240};     // pole, pendulum rod
  Color grid{40, 40, 40};       // grid cell boundaries
  Color occluder{128, 128, 128};
  Color marker{255, 255, 255};  // out-of-frame marker pixel
};

// Configuration of the state-to-image mapping. The occluder rectangle is in
// frame fractions [0, 1] and is snapped to whole pixels when painted.
struct RenderMap {
  int width = 64;
  int height = 64;
  int channels = 3;
  RenderMode mode = RenderMode::kInjective;
  double occluder_x0 = 0.2;
  double occluder_y0 = 0.4;
  double occluder_x1 = 0.8;
  double occluder_y1 = 0.6;
  double crop_shake_max = 0.0;
  Palette palette;

  // Throws ConfigError on bad geometry or parameters.
  void Validate() const;
};

// Float accumulation buffer with anti-aliased shape primitives. Geometry is
// in pixel units with (0, 0) at the top-left corner of the top-left pixel;
// pixel (x, y) has its center at (x + 0.5, y + 0.5).
class Canvas {
 public:
  Canvas(int width, int height, int channels, const Color& background);

  int width() const { return width_; }
  int height() const { return height_; }

  void FillDisk(double cx, double cy, double radius, const Color& color);
  // Axis-aligned box given by its center and half extents.
  void FillBox(double cx, double cy, double half_w, double half_h, const Color& color);
  // Segment with round caps.
  void FillSegment(double x0, double y0, double x1, double y1, double half_width,
                   const Color& color);
  // Opaque pixel-aligned rectangle [x0, x1) x [y0, y1).
  void FillPixels(int x0, int y0, int x1, int y1, const Color& color);
  void SetPixel(int x, int y, const Color& color);

  // Rounds half away from zero into a u8 frame.
  Frame ToFrame() const;

 private:
  // Blends `color` into the pixels of the bounding box [x0, x1) x [y0, y1)
  // with per-pixel coverage given by `coverage(px, py)`.
  template <typename F>
  void Blend(double x0, double y0, double x1, double y1, const Color& color, F coverage);

  int width_;
  int height_;
  int channels_;
  std::vector<double> values_;
};

// Rounds a non-negative intensity half away from zero and clamps to u8.
std::uint8_t RoundToByte(double v);

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

// Bilinear resize of `rect` to out_w x out_h using half-pixel centers with
// edge clamping inside the rect.
Frame ResizeAndCrop(const Frame& frame, const CropRect& rect, int out_w, int out_h);

// Crops floor(u * W) / floor(u * H) pixels from each side, u ~ U[0, max_frac]
// drawn independently per side, and resizes back to the input size.
Frame CropShake(const Frame& frame, double max_frac, Rng& rng);

}  // namespace vigan::envs

#endif  // VIGAN_ENVS_RENDER_H_
