#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chartattrib/geometry.hpp"

namespace chartattrib {

/// 8-bit interleaved RGB or RGBA image, row-major.
class RasterImage {
 public:
  RasterImage() = default;
  /// Throws Validation on channels outside {3, 4}, zero dims, or a sample
  /// count that is not width * height * channels.
  RasterImage(std::size_t width, std::size_t height, std::size_t channels,
              std::vector<std::uint8_t> samples);
  RasterImage(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  Frame frame() const noexcept {
    return {static_cast<std::int64_t>(width_), static_cast<std::int64_t>(height_)};
  }

  std::span<const std::uint8_t> pixel(std::size_t x, std::size_t y) const noexcept {
    return {samples_.data() + (y * width_ + x) * channels_, channels_};
  }
  std::span<std::uint8_t> pixel(std::size_t x, std::size_t y) noexcept {
    return {samples_.data() + (y * width_ + x) * channels_, channels_};
  }
  const std::vector<std::uint8_t>& samples() const noexcept { return samples_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> samples_;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Keeps pixels inside the union of the boxes; zeroes the color of every
/// other pixel and forces alpha (if any) to 255. An empty set blacks out the
/// whole image. Throws Contract when the set's frame differs from the image.
RasterImage mask_outside(const RasterImage& img, const BoxSet& s);

/// Draws each box's outline in `stroke`, `width` pixels thick and grown
/// inward from the box edge. Throws Contract on a frame mismatch or width 0.
RasterImage overlay_boxes(const RasterImage& img, const BoxSet& s, Rgb stroke,
                          std::size_t width);

/// 8-bit gray/RGB/RGBA PNGs (palette and gray are expanded to RGB(A),
/// 16-bit is stripped to 8-bit). Throws Io or Format.
RasterImage read_png(const std::filesystem::path& path);
void write_png(const RasterImage& img, const std::filesystem::path& path);

/// Width and height from the PNG header without decoding pixel data.
Frame png_dimensions(const std::filesystem::path& path);

}  // namespace chartattrib
