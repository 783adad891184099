#include "rcov/vprompt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcov {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw std::invalid_argument("pixel buffer length must be width*height*3");
  }
}

PixelRect to_pixel_rect(const BBoxNorm& box, int width, int height) {
  auto scale = [](double v, int extent) {
    const auto px = static_cast<long long>(std::round(v * extent));
    return static_cast<int>(std::clamp<long long>(px, 0, extent - 1));
  };
  return {scale(box.x_min(), width), scale(box.y_min(), height), scale(box.x_max(), width),
          scale(box.y_max(), height)};
}

Circle circle_for(const PixelRect& rect, BoxShape shape) {
  Circle c{(rect.x0 + rect.x1) / 2, (rect.y0 + rect.y1) / 2, 0};
  const int w = rect.width_span();
  const int h = rect.height_span();
  if (shape == BoxShape::incircle) {
    c.radius = std::min(w, h) / 2;
  } else {
    c.radius = static_cast<int>(std::lround(std::sqrt(double(w) * w + double(h) * h) / 2.0));
  }
  return c;
}

namespace {

// Midpoint rasterization of an annulus with outer radius `outer` and inner
// radius `inner` (both inclusive). Emits horizontal runs hline(xa, xb, y) and
// vertical runs vline(x, ya, yb); runs may overlap and may leave the image.
// With inner == outer this is the classic one-pixel midpoint circle.
template <typename HLine, typename VLine>
void trace_annulus(const Circle& c, int inner, HLine hline, VLine vline) {
  const int outer = c.radius;
  inner = std::max(inner, 0);
  int xo = outer;
  int xi = inner;
  int y = 0;
  int erro = 1 - xo;
  int erri = 1 - xi;
  while (xo >= y) {
    hline(c.cx + xi, c.cx + xo, c.cy + y);
    vline(c.cx + y, c.cy + xi, c.cy + xo);
    hline(c.cx - xo, c.cx - xi, c.cy + y);
    vline(c.cx - y, c.cy + xi, c.cy + xo);
    hline(c.cx - xo, c.cx - xi, c.cy - y);
    vline(c.cx - y, c.cy - xo, c.cy - xi);
    hline(c.cx + xi, c.cx + xo, c.cy - y);
    vline(c.cx + y, c.cy - xo, c.cy - xi);
    ++y;
    if (erro < 0) {
      erro += 2 * y + 1;
    } else {
      --xo;
      erro += 2 * (y - xo + 1);
    }
    if (y > inner) {
      xi = y;
    } else if (erri < 0) {
      erri += 2 * y + 1;
    } else {
      --xi;
      erri += 2 * (y - xi + 1);
    }
  }
}

void check_spec(const OverlaySpec& spec) {
  if (spec.stroke_px < 1) throw std::invalid_argument("stroke_px must be >= 1");
}

struct Span {
  int xa;
  int xb;
};

// Per-row stroke spans, already clipped to [0, width).
std::vector<std::vector<Span>> stroke_spans(const RasterImage& image, const OverlaySpec& spec) {
  const int w = image.width();
  const int h = image.height();
  std::vector<std::vector<Span>> rows(static_cast<std::size_t>(h));
  auto add = [&](int xa, int xb, int y) {
    if (y < 0 || y >= h) return;
    xa = std::max(xa, 0);
    xb = std::min(xb, w - 1);
    if (xa <= xb) rows[static_cast<std::size_t>(y)].push_back({xa, xb});
  };

  const auto rect = to_pixel_rect(spec.bbox, w, h);
  const int s = spec.stroke_px;
  if (spec.shape == BoxShape::rectangle) {
    for (int y = rect.y0; y <= rect.y1; ++y) {
      if (y - rect.y0 < s || rect.y1 - y < s) {
        add(rect.x0, rect.x1, y);
      } else {
        add(rect.x0, std::min(rect.x0 + s - 1, rect.x1), y);
        add(std::max(rect.x1 - s + 1, rect.x0), rect.x1, y);
      }
    }
    return rows;
  }

  const auto circle = circle_for(rect, spec.shape);
  trace_annulus(
      circle, circle.radius - s + 1, [&](int xa, int xb, int y) { add(xa, xb, y); },
      [&](int x, int ya, int yb) {
        for (int y = std::max(ya, 0); y <= std::min(yb, h - 1); ++y) add(x, x, y);
      });
  return rows;
}

}  // namespace

OverlayResult overlay(const RasterImage& image, const OverlaySpec& spec) {
  check_spec(spec);
  const auto rows = stroke_spans(image, spec);
  OverlayResult out{image, false, 0};
  const int h = image.height();
  const int w = image.width();
  std::size_t painted = 0;

#pragma omp parallel for schedule(static) reduction(+ : painted)
  for (int y = 0; y < h; ++y) {
    const auto& spans = rows[static_cast<std::size_t>(y)];
    if (spans.empty()) continue;
    std::vector<char> hit(static_cast<std::size_t>(w), 0);
    for (const auto& sp : spans) std::fill(hit.begin() + sp.xa, hit.begin() + sp.xb + 1, 1);
    auto px = out.image.row(y);
    for (int x = 0; x < w; ++x) {
      if (!hit[static_cast<std::size_t>(x)]) continue;
      auto* p = &px[static_cast<std::size_t>(x) * 3];
      p[0] = spec.color.r;
      p[1] = spec.color.g;
      p[2] = spec.color.b;
      ++painted;
    }
  }
  out.painted_pixels = painted;
  out.fully_clipped = painted == 0;
  return out;
}

OverlayResult overlay_serial(const RasterImage& image, const OverlaySpec& spec) {
  check_spec(spec);
  OverlayResult out{image, false, 0};
  std::vector<char> hit(static_cast<std::size_t>(image.width()) * image.height(), 0);
  auto plot = [&](int x, int y) {
    if (!image.contains(x, y)) return;
    auto& h = hit[static_cast<std::size_t>(y) * image.width() + x];
    if (!h) ++out.painted_pixels;
    h = 1;
    out.image.set(x, y, spec.color);
  };

  const auto rect = to_pixel_rect(spec.bbox, image.width(), image.height());
  const int s = spec.stroke_px;
  if (spec.shape == BoxShape::rectangle) {
    for (int y = rect.y0; y <= rect.y1; ++y) {
      for (int x = rect.x0; x <= rect.x1; ++x) {
        const int edge = std::min({x - rect.x0, rect.x1 - x, y - rect.y0, rect.y1 - y});
        if (edge < s) plot(x, y);
      }
    }
  } else {
    const auto circle = circle_for(rect, spec.shape);
    trace_annulus(
        circle, circle.radius - s + 1,
        [&](int xa, int xb, int y) {
          for (int x = xa; x <= xb; ++x) plot(x, y);
        },
        [&](int x, int ya, int yb) {
          for (int y = ya; y <= yb; ++y) plot(x, y);
        });
  }
  out.fully_clipped = out.painted_pixels == 0;
  return out;
}

RasterImage crop(const RasterImage& image, const BBoxNorm& box) {
  const auto r = to_pixel_rect(box, image.width(), image.height());
  const int w = r.x1 - r.x0 + 1;
  const int h = r.y1 - r.y0 + 1;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const auto src = image.row(r.y0 + y).subspan(static_cast<std::size_t>(r.x0) * 3,
                                                 static_cast<std::size_t>(w) * 3);
    std::copy(src.begin(), src.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  }
  return {w, h, std::move(pixels)};
}

}  // namespace rcov
