#include <algorithm>
#include <fstream>

#include "chartattrib/error.hpp"
#include "chartattrib/metrics.hpp"
#include "chartattrib/raster.hpp"
#include "chartattrib/verification.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chartattrib;

namespace {

RasterImage random_image(PortableGaussian& rng, std::size_t w, std::size_t h, std::size_t ch) {
  std::vector<std::uint8_t> s(w * h * ch);
  for (auto& v : s) v = static_cast<std::uint8_t>(rng.next_u64());
  return RasterImage(w, h, ch, std::move(s));
}

BoxSet random_boxes(PortableGaussian& rng, Frame f) {
  BoxSet s({}, f);
  const int n = static_cast<int>(rng.next_u64() % 5);
  for (int k = 0; k < n; ++k) {
    const auto x = static_cast<std::int64_t>(rng.next_u64() % f.width);
    const auto y = static_cast<std::int64_t>(rng.next_u64() % f.height);
    s.boxes.push_back({x - 1, y - 1, x + static_cast<std::int64_t>(rng.next_u64() % 9),
                       y + static_cast<std::int64_t>(rng.next_u64() % 9)});
  }
  return s;
}

bool inside_any(const BoxSet& s, std::int64_t x, std::int64_t y) {
  return std::any_of(s.boxes.begin(), s.boxes.end(), [&](const PixelBox& b) {
    return b.x1 <= x && x < b.x2 && b.y1 <= y && y < b.y2;
  });
}

}  // namespace

TEST_CASE("mask_outside worked examples") {
  SUBCASE("4x4 white, one 2x2 box keeps 4 pixels") {
    const RasterImage img(4, 4, 3, std::uint8_t{255});
    const RasterImage out = mask_outside(img, BoxSet({{1, 1, 3, 3}}, img.frame()));
    int white = 0, black = 0;
    for (std::size_t y = 0; y < 4; ++y) {
      for (std::size_t x = 0; x < 4; ++x) {
        const auto px = out.pixel(x, y);
        if (px[0] == 255 && px[1] == 255 && px[2] == 255) ++white;
        if (px[0] == 0 && px[1] == 0 && px[2] == 0) ++black;
      }
    }
    CHECK(white == 4);
    CHECK(black == 12);
  }
  SUBCASE("full-frame box is the identity") {
    PortableGaussian rng(1);
    const RasterImage img = random_image(rng, 9, 7, 3);
    CHECK(mask_outside(img, BoxSet({{0, 0, 9, 7}}, img.frame())) == img);
  }
  SUBCASE("empty set blacks out everything and makes alpha opaque") {
    PortableGaussian rng(2);
    const RasterImage img = random_image(rng, 6, 5, 4);
    const RasterImage out = mask_outside(img, BoxSet({}, img.frame()));
    for (std::size_t y = 0; y < 5; ++y) {
      for (std::size_t x = 0; x < 6; ++x) {
        const auto px = out.pixel(x, y);
        CHECK((px[0] == 0 && px[1] == 0 && px[2] == 0 && px[3] == 255));
      }
    }
  }
  SUBCASE("frame mismatch") {
    const RasterImage img(4, 4, 3);
    CHECK_THROWS_AS(mask_outside(img, BoxSet({}, {4, 5})), Error);
  }
}

TEST_CASE("masking laws on 100 random cases") {
  PortableGaussian rng(99);
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng.next_u64() % 40, h = 1 + rng.next_u64() % 30;
    const RasterImage img = random_image(rng, w, h, 3 + rng.next_u64() % 2);
    BoxSet s = random_boxes(rng, img.frame());
    const RasterImage once = mask_outside(img, s);
    std::int64_t preserved = 0;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const auto a = img.pixel(x, y), b = once.pixel(x, y);
        if (inside_any(s, static_cast<std::int64_t>(x), static_cast<std::int64_t>(y))) {
          REQUIRE(std::equal(a.begin(), a.begin() + 3, b.begin()));
          ++preserved;
        } else {
          REQUIRE((b[0] == 0 && b[1] == 0 && b[2] == 0));
        }
        if (img.channels() == 4) REQUIRE(b[3] == 255);
      }
    }
    REQUIRE(preserved == rasterize(s).count());
    REQUIRE(mask_outside(once, s) == once);
    std::reverse(s.boxes.begin(), s.boxes.end());
    REQUIRE(mask_outside(img, s) == once);
  }
}

TEST_CASE("overlay_boxes") {
  const RasterImage img(20, 20, 3, std::uint8_t{255});
  const Rgb red{255, 0, 0};
  auto recolored = [&](const RasterImage& out) {
    int n = 0;
    for (std::size_t k = 0; k < img.samples().size(); k += 3) n += out.samples()[k + 1] != 255;
    return n;
  };
  SUBCASE("empty set is the identity") { CHECK(overlay_boxes(img, BoxSet({}, img.frame()), red, 2) == img); }
  SUBCASE("10x10 box at width 1 recolors its 36-pixel perimeter") {
    const BoxSet s({{3, 4, 13, 14}}, img.frame());
    const RasterImage out = overlay_boxes(img, s, red, 1);
    CHECK(recolored(out) == 4 * 10 - 4);
    CHECK(out.pixel(3, 4)[0] == 255);
    CHECK(out.pixel(3, 4)[1] == 0);
    CHECK(out.pixel(12, 13)[1] == 0);
    CHECK(out.pixel(8, 8)[1] == 255);   // interior untouched
    CHECK(out.pixel(13, 14)[1] == 255);  // half-open: x2/y2 are outside
    CHECK(overlay_boxes(out, s, red, 1) == out);
  }
  SUBCASE("thicker strokes grow inward") {
    const RasterImage out = overlay_boxes(img, BoxSet({{3, 4, 13, 14}}, img.frame()), red, 2);
    CHECK(recolored(out) == 100 - 36);
    CHECK(overlay_boxes(img, BoxSet({{0, 0, 4, 4}}, img.frame()), red, 3) ==
          overlay_boxes(img, BoxSet({{0, 0, 4, 4}}, img.frame()), red, 2));
  }
  SUBCASE("out-of-frame boxes are clipped, width 0 rejected") {
    CHECK_NOTHROW(overlay_boxes(img, BoxSet({{-5, -5, 50, 50}}, img.frame()), red, 1));
    CHECK_THROWS_AS(overlay_boxes(img, BoxSet({}, img.frame()), red, 0), Error);
  }
}

TEST_CASE("PNG round trip is lossless") {
  const auto dir = chartattrib::testing::scratch_dir("png");
  PortableGaussian rng(4);
  for (std::size_t ch : {3u, 4u}) {
    const RasterImage img = random_image(rng, 17, 11, ch);
    write_png(img, dir / "img.png");
    CHECK(read_png(dir / "img.png") == img);
    CHECK(png_dimensions(dir / "img.png") == Frame{17, 11});
  }
}

TEST_CASE("PNG errors") {
  const auto dir = chartattrib::testing::scratch_dir("pngerr");
  CHECK_THROWS_AS(read_png(dir / "missing.png"), Error);
  {
    std::ofstream(dir / "junk.png") << "not a png at all, definitely not";
  }
  try {
    read_png(dir / "junk.png");
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
  // Valid signature, truncated body.
  const auto good = chartattrib::testing::read_file(chartattrib::testing::sample_dir() / "c1.png");
  {
    std::ofstream(dir / "cut.png", std::ios::binary) << good.substr(0, 60);
  }
  CHECK_THROWS_AS(read_png(dir / "cut.png"), Error);
}

TEST_CASE("sample charts decode") {
  const RasterImage c1 = read_png(chartattrib::testing::sample_dir() / "c1.png");
  CHECK(c1.width() == 350);
  CHECK(c1.height() == 280);
  CHECK(c1.channels() == 3);
  CHECK(read_png(chartattrib::testing::sample_dir() / "c4.png").channels() == 4);
}
