#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

namespace chartattrib {

/// Window on the patch grid: top row i, left column j, h rows by w columns.
struct GridRegion {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t area() const noexcept { return h * w; }
  friend bool operator==(const GridRegion&, const GridRegion&) = default;
};

/// Total order used to break score ties: smaller h, then w, then i, then j.
inline bool tie_order_less(const GridRegion& a, const GridRegion& b) noexcept {
  return std::tie(a.h, a.w, a.i, a.j) < std::tie(b.h, b.w, b.i, b.j);
}

bool fits(const GridRegion& r, std::size_t grid_h, std::size_t grid_w) noexcept;

/// Single-box IOU of two grid regions, in patch units.
double region_iou(const GridRegion& a, const GridRegion& b) noexcept;

/// Half-open pixel rectangle [x1, x2) x [y1, y2), origin at the top-left.
/// Coordinates are signed so out-of-frame predictions can be represented and
/// clamped later.
struct PixelBox {
  std::int64_t x1 = 0;
  std::int64_t y1 = 0;
  std::int64_t x2 = 0;
  std::int64_t y2 = 0;

  bool empty() const noexcept { return x2 <= x1 || y2 <= y1; }
  std::int64_t area() const noexcept { return empty() ? 0 : (x2 - x1) * (y2 - y1); }
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct Frame {
  std::int64_t width = 0;
  std::int64_t height = 0;

  std::int64_t pixels() const noexcept { return width * height; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Intersection of the box with the frame; nullopt when nothing remains.
std::optional<PixelBox> clamp_to_frame(const PixelBox& b, const Frame& f) noexcept;

bool within_frame(const PixelBox& b, const Frame& f) noexcept;

/// A set of pixel boxes over one image frame. Boxes may overlap each other
/// and may extend past the frame; consumers clamp.
struct BoxSet {
  std::vector<PixelBox> boxes;
  Frame frame;

  BoxSet() = default;
  /// Throws Validation when either frame dimension is < 1.
  BoxSet(std::vector<PixelBox> boxes, Frame frame);

  /// Boxes clamped to the frame, with fully-outside or inverted boxes dropped.
  std::vector<PixelBox> clamped() const;
};

}  // namespace chartattrib
