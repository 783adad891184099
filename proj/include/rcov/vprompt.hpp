#pragma once

// Visual prompts: box overlays and crops on RGB8 rasters.
//
// Two implementations of every overlay are kept. `overlay_serial` plots
// pixels one by one and is the reference; `overlay` builds per-row spans and
// paints rows in parallel with OpenMP. Both must produce identical bytes.

#include <cstdint>
#include <span>
#include <vector>

#include "rcov/domain.hpp"

namespace rcov {

class RasterImage {
 public:
  RasterImage() = default;
  /// Filled with `fill`. Throws std::invalid_argument for zero dimensions.
  RasterImage(int width, int height, Rgb fill = {255, 255, 255});
  /// Takes a row-major RGB8 buffer; its length must be width*height*3.
  RasterImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgb at(int x, int y) const noexcept {
    const auto* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    auto* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> row(int y) noexcept {
    return {pixels_.data() + offset(0, y), static_cast<std::size_t>(width_) * 3};
  }
  std::span<const std::uint8_t> row(int y) const noexcept {
    return {pixels_.data() + offset(0, y), static_cast<std::size_t>(width_) * 3};
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Inclusive pixel corners.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width_span() const noexcept { return x1 - x0; }
  int height_span() const noexcept { return y1 - y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Scales by the image size, rounds half away from zero, clamps to the last
/// valid pixel index.
PixelRect to_pixel_rect(const BBoxNorm& box, int width, int height);

struct OverlaySpec {
  BBoxNorm bbox = BBoxNorm::full();
  BoxShape shape = BoxShape::rectangle;
  Rgb color{255, 0, 0};
  int stroke_px = 1;
};

struct Circle {
  int cx = 0;
  int cy = 0;
  int radius = 0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

/// Center and radius used for the two circle shapes. The center is the
/// rect midpoint rounded down; incircle radius is min(w, h)/2 rounded down,
/// circumcircle radius is the half-diagonal rounded half away from zero.
Circle circle_for(const PixelRect& rect, BoxShape shape);

struct OverlayResult {
  RasterImage image;
  /// Set when no stroke pixel landed inside the image.
  bool fully_clipped = false;
  std::size_t painted_pixels = 0;
};

/// Strokes the shape onto a copy of the image. Rectangles grow inward from
/// the box edge; circles are annuli of width stroke_px drawn inward from the
/// radius. Throws std::invalid_argument when stroke_px < 1.
OverlayResult overlay(const RasterImage& image, const OverlaySpec& spec);
OverlayResult overlay_serial(const RasterImage& image, const OverlaySpec& spec);

/// The to_pixel_rect region, both corners inclusive.
RasterImage crop(const RasterImage& image, const BBoxNorm& box);

}  // namespace rcov
