#include "chartattrib/geometry.hpp"

#include <algorithm>

#include "chartattrib/error.hpp"

namespace chartattrib {

bool fits(const GridRegion& r, std::size_t grid_h, std::size_t grid_w) noexcept {
  return r.h >= 1 && r.w >= 1 && r.h <= grid_h && r.w <= grid_w && r.i <= grid_h - r.h &&
         r.j <= grid_w - r.w;
}

double region_iou(const GridRegion& a, const GridRegion& b) noexcept {
  const std::size_t top = std::max(a.i, b.i);
  const std::size_t left = std::max(a.j, b.j);
  const std::size_t bottom = std::min(a.i + a.h, b.i + b.h);
  const std::size_t right = std::min(a.j + a.w, b.j + b.w);
  const std::size_t inter = (bottom > top && right > left) ? (bottom - top) * (right - left) : 0;
  const std::size_t uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<PixelBox> clamp_to_frame(const PixelBox& b, const Frame& f) noexcept {
  PixelBox c{std::clamp<std::int64_t>(b.x1, 0, f.width), std::clamp<std::int64_t>(b.y1, 0, f.height),
             std::clamp<std::int64_t>(b.x2, 0, f.width), std::clamp<std::int64_t>(b.y2, 0, f.height)};
  if (c.empty()) return std::nullopt;
  return c;
}

bool within_frame(const PixelBox& b, const Frame& f) noexcept {
  return !b.empty() && b.x1 >= 0 && b.y1 >= 0 && b.x2 <= f.width && b.y2 <= f.height;
}

BoxSet::BoxSet(std::vector<PixelBox> bs, Frame fr) : boxes(std::move(bs)), frame(fr) {
  if (frame.width < 1 || frame.height < 1) {
    fail(ErrorKind::Validation, "box set frame must be at least 1x1");
  }
}

std::vector<PixelBox> BoxSet::clamped() const {
  std::vector<PixelBox> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (auto c = clamp_to_frame(b, frame)) out.push_back(*c);
  }
  return out;
}

}  // namespace chartattrib
