#include <cmath>

#include "chartattrib/error.hpp"
#include "chartattrib/metrics.hpp"
#include "chartattrib/verification.hpp"
#include "doctest.h"

using namespace chartattrib;

namespace {

// Pixel-by-pixel oracle: is (x, y) inside any clamped box?
std::int64_t enumerate_pixels(const BoxSet& s) {
  std::int64_t n = 0;
  for (std::int64_t y = 0; y < s.frame.height; ++y) {
    for (std::int64_t x = 0; x < s.frame.width; ++x) {
      for (const auto& b : s.boxes) {
        if (b.x1 <= x && x < b.x2 && b.y1 <= y && y < b.y2) {
          ++n;
          break;
        }
      }
    }
  }
  return n;
}

BoxSet random_set(PortableGaussian& rng, Frame f, std::size_t max_boxes) {
  BoxSet s({}, f);
  const std::size_t n = rng.next_u64() % (max_boxes + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x1 = static_cast<std::int64_t>(rng.next_u64() % f.width) - 2;
    const auto y1 = static_cast<std::int64_t>(rng.next_u64() % f.height) - 2;
    s.boxes.push_back({x1, y1, x1 + 1 + static_cast<std::int64_t>(rng.next_u64() % 12),
                       y1 + 1 + static_cast<std::int64_t>(rng.next_u64() % 12)});
  }
  return s;
}

}  // namespace

TEST_CASE("rasterize") {
  SUBCASE("two overlapping 2x2 boxes cover 7 pixels") {
    const BoxSet s({{0, 0, 2, 2}, {1, 1, 3, 3}}, {4, 4});
    const BinaryMask m = rasterize(s);
    CHECK(m.count() == 7);
    CHECK(m.count() == enumerate_pixels(s));
    CHECK(m.test(1, 1));
    CHECK_FALSE(m.test(3, 3));
    CHECK_FALSE(m.test(0, 2));
  }
  SUBCASE("empty set is all zero; frame-covering box is all ones") {
    CHECK(rasterize(BoxSet({}, {5, 3})).count() == 0);
    CHECK(rasterize(BoxSet({{0, 0, 5, 3}}, {5, 3})).count() == 15);
  }
  SUBCASE("runs across 64-bit word boundaries") {
    const BoxSet s({{60, 0, 130, 2}, {0, 2, 64, 3}, {63, 3, 65, 4}}, {200, 4});
    CHECK(rasterize(s).count() == enumerate_pixels(s));
    CHECK(rasterize(s).count() == 140 + 64 + 2);
  }
  SUBCASE("matches pixel enumeration on random sets, clamping included") {
    PortableGaussian rng(8);
    for (int t = 0; t < 200; ++t) {
      const Frame f{1 + static_cast<std::int64_t>(rng.next_u64() % 90),
                    1 + static_cast<std::int64_t>(rng.next_u64() % 30)};
      const BoxSet s = random_set(rng, f, 6);
      REQUIRE(rasterize(s).count() == enumerate_pixels(s));
    }
  }
}

TEST_CASE("multibox_iou") {
  const Frame f{20, 20};
  SUBCASE("offset squares: 25 / 175") {
    const double v = multibox_iou(BoxSet({{0, 0, 10, 10}}, f), BoxSet({{5, 5, 15, 15}}, f));
    CHECK(v == 25.0 / 175.0);
    CHECK(v == doctest::Approx(0.142857).epsilon(1e-6));
  }
  SUBCASE("internal overlap collapses in the mask") {
    CHECK(multibox_iou(BoxSet({{0, 0, 10, 10}, {5, 0, 15, 10}}, f), BoxSet({{0, 0, 15, 10}}, f)) ==
          1.0);
  }
  SUBCASE("identical and disjoint sets") {
    const BoxSet a({{1, 1, 4, 9}, {6, 2, 19, 5}}, f);
    CHECK(multibox_iou(a, a) == 1.0);
    CHECK(multibox_iou(BoxSet({{0, 0, 5, 5}}, f), BoxSet({{5, 5, 9, 9}}, f)) == 0.0);
  }
  SUBCASE("empty-set conventions") {
    const BoxSet empty({}, f);
    CHECK(multibox_iou(empty, empty) == 1.0);
    CHECK(multibox_iou(empty, BoxSet({{0, 0, 1, 1}}, f)) == 0.0);
    CHECK(multibox_iou(BoxSet({{0, 0, 1, 1}}, f), empty) == 0.0);
    // A box entirely outside the frame clamps to nothing.
    CHECK(multibox_iou(BoxSet({{50, 50, 60, 60}}, f), empty) == 1.0);
  }
  SUBCASE("frame mismatch") {
    try {
      multibox_iou(BoxSet({}, f), BoxSet({}, {20, 21}));
      FAIL("expected contract error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Contract);
    }
  }
  SUBCASE("symmetric, in range, reduces to single_iou, equals the sweep oracle") {
    PortableGaussian rng(13);
    for (int t = 0; t < 300; ++t) {
      const Frame fr{10 + static_cast<std::int64_t>(rng.next_u64() % 60),
                     10 + static_cast<std::int64_t>(rng.next_u64() % 60)};
      const BoxSet p = random_set(rng, fr, 5), g = random_set(rng, fr, 5);
      const double v = multibox_iou(p, g);
      REQUIRE(v == multibox_iou(g, p));
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(v == exact_multibox_iou(p, g));
    }
    for (int t = 0; t < 100; ++t) {
      const Frame fr{64, 64};
      BoxSet p = random_set(rng, fr, 1), g = random_set(rng, fr, 1);
      const auto pc = p.clamped(), gc = g.clamped();
      if (pc.size() != 1 || gc.size() != 1) continue;
      p.boxes = pc;
      g.boxes = gc;
      REQUIRE(multibox_iou(p, g) == single_iou(pc[0], gc[0]));
    }
  }
}

TEST_CASE("single_iou") {
  CHECK(single_iou({3, 4, 9, 8}, {3, 4, 9, 8}) == 1.0);
  CHECK(single_iou({0, 0, 10, 10}, {5, 5, 15, 15}) == 25.0 / 175.0);
  CHECK(single_iou({0, 0, 5, 5}, {5, 0, 10, 5}) == 0.0);
  CHECK(single_iou({0, 0, 5, 5}, {20, 20, 30, 30}) == 0.0);
  CHECK(single_iou({0, 0, 10, 10}, {2, 2, 4, 4}) == 4.0 / 100.0);
  CHECK(single_iou({0, 0, 10, 10}, {5, 5, 15, 15}) == single_iou({5, 5, 15, 15}, {0, 0, 10, 10}));
}

TEST_CASE("kappa") {
  CHECK(kappa({50, 0, 0, 50}) == 1.0);
  // p_o = 0.85, p_e = 0.5
  CHECK(std::abs(kappa({40, 5, 10, 45}) - 0.7) <= 1e-12);
  CHECK(kappa({25, 25, 25, 25}) == 0.0);
  SUBCASE("swap of annotators leaves kappa unchanged") {
    for (const AgreementTable t : {AgreementTable{40, 5, 10, 45}, AgreementTable{3, 9, 1, 7},
                                   AgreementTable{0, 4, 2, 11}}) {
      CHECK(kappa(t) == kappa({t.a, t.c, t.b, t.d}));
      CHECK(kappa(t) <= 1.0);
    }
  }
  SUBCASE("total disagreement is negative") { CHECK(kappa({0, 10, 10, 0}) == -1.0); }
  SUBCASE("degenerate marginals with full agreement is 1") {
    CHECK(kappa({100, 0, 0, 0}) == 1.0);
    CHECK(kappa({0, 0, 0, 7}) == 1.0);
  }
  SUBCASE("invalid tables") {
    CHECK_THROWS_AS(kappa({0, 0, 0, 0}), Error);
    CHECK_THROWS_AS(kappa({-1, 2, 0, 0}), Error);
  }
}

TEST_CASE("sts_cosine") {
  const std::vector<float> v{0.3f, -2.0f, 7.5f}, x{1, 0}, y{0, 1}, xy{1, 1};
  CHECK(std::abs(sts_cosine(v, v) - 1.0) <= 1e-12);
  CHECK(sts_cosine(x, y) == 0.0);
  CHECK(std::abs(sts_cosine(x, xy) - 1.0 / std::sqrt(2.0)) <= 1e-12);
  CHECK_THROWS_AS(sts_cosine(x, v), Error);
}
