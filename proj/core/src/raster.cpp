#include "chartattrib/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <string>

#include "chartattrib/error.hpp"
#include "chartattrib/metrics.hpp"

namespace chartattrib {
namespace {

void require_same_frame(const RasterImage& img, const BoxSet& s) {
  if (!(img.frame() == s.frame)) {
    fail(ErrorKind::Contract,
         "box set frame " + std::to_string(s.frame.width) + "x" + std::to_string(s.frame.height) +
             " does not match image " + std::to_string(img.width()) + "x" +
             std::to_string(img.height()));
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  *text = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

RasterImage::RasterImage(std::size_t width, std::size_t height, std::size_t channels,
                         std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
  if (channels_ != 3 && channels_ != 4) {
    fail(ErrorKind::Validation, "image must have 3 or 4 channels, got " + std::to_string(channels_));
  }
  if (width_ == 0 || height_ == 0) fail(ErrorKind::Validation, "image dims must be positive");
  if (samples_.size() != width_ * height_ * channels_) {
    fail(ErrorKind::Validation, "image sample count does not match width*height*channels");
  }
}

RasterImage::RasterImage(std::size_t width, std::size_t height, std::size_t channels,
                         std::uint8_t fill)
    : RasterImage(width, height, channels,
                  std::vector<std::uint8_t>(width * height * channels, fill)) {}

RasterImage mask_outside(const RasterImage& img, const BoxSet& s) {
  require_same_frame(img, s);
  const BinaryMask keep = rasterize(s);
  RasterImage out = img;
  const std::size_t ch = img.channels();
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = out.pixel(x, y);
      if (!keep.test(static_cast<std::int64_t>(x), static_cast<std::int64_t>(y))) {
        px[0] = px[1] = px[2] = 0;
      }
      if (ch == 4) px[3] = 255;
    }
  }
  return out;
}

RasterImage overlay_boxes(const RasterImage& img, const BoxSet& s, Rgb stroke,
                          std::size_t width) {
  require_same_frame(img, s);
  if (width < 1) fail(ErrorKind::Contract, "overlay stroke width must be >= 1");
  RasterImage out = img;
  const auto t = static_cast<std::int64_t>(width);
  for (const auto& b : s.clamped()) {
    for (std::int64_t y = b.y1; y < b.y2; ++y) {
      const bool edge_row = y < b.y1 + t || y >= b.y2 - t;
      for (std::int64_t x = b.x1; x < b.x2; ++x) {
        if (edge_row || x < b.x1 + t || x >= b.x2 - t) {
          auto px = out.pixel(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
          std::copy(stroke.begin(), stroke.end(), px.begin());
        }
      }
    }
  }
  return out;
}

RasterImage read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorKind::Format, path.string() + " is not a PNG file");
  }

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                           png_warning_fn);
  if (!png) fail(ErrorKind::Capacity, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> samples;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, "cannot decode " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_packing(png);
  png_read_update_info(png, info);

  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  samples.resize(static_cast<std::size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = samples.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return RasterImage(w, h, static_cast<std::size_t>(channels), std::move(samples));
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  FilePtr file = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                            png_warning_fn);
  if (!png) fail(ErrorKind::Capacity, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(img.height());

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "cannot write " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto* base = const_cast<std::uint8_t*>(img.samples().data());
  for (std::size_t y = 0; y < img.height(); ++y) rows[y] = base + y * img.width() * img.channels();
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) fail(ErrorKind::Io, "cannot flush " + path.string());
}

Frame png_dimensions(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  std::uint8_t head[24];
  if (std::fread(head, 1, sizeof head, file.get()) != sizeof head || png_sig_cmp(head, 0, 8) != 0) {
    fail(ErrorKind::Format, path.string() + " is not a PNG file");
  }
  // IHDR is always the first chunk: length(4) "IHDR"(4) width(4) height(4).
  auto be32 = [&](int at) {
    return (std::int64_t{head[at]} << 24) | (std::int64_t{head[at + 1]} << 16) |
           (std::int64_t{head[at + 2]} << 8) | std::int64_t{head[at + 3]};
  };
  if (std::string(reinterpret_cast<char*>(head + 12), 4) != "IHDR") {
    fail(ErrorKind::Format, path.string() + " has no leading IHDR chunk");
  }
  return {be32(16), be32(20)};
}

}  // namespace chartattrib
