#include "chartattrib/metrics.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "chartattrib/attribution.hpp"
#include "chartattrib/error.hpp"

namespace chartattrib {

__extension__ typedef __int128 wide_int;

BinaryMask::BinaryMask(Frame frame)
    : frame_(frame),
      words_per_row_(static_cast<std::size_t>((frame.width + 63) / 64)),
      words_(words_per_row_ * static_cast<std::size_t>(frame.height), 0) {
  if (frame.width < 1 || frame.height < 1) {
    fail(ErrorKind::Validation, "mask frame must be at least 1x1");
  }
}

bool BinaryMask::test(std::int64_t x, std::int64_t y) const noexcept {
  const auto word = words_[static_cast<std::size_t>(y) * words_per_row_ + static_cast<std::size_t>(x / 64)];
  return (word >> (x % 64)) & 1u;
}

void BinaryMask::set(std::int64_t x, std::int64_t y) noexcept {
  words_[static_cast<std::size_t>(y) * words_per_row_ + static_cast<std::size_t>(x / 64)] |=
      std::uint64_t{1} << (x % 64);
}

void BinaryMask::set_run(std::int64_t y, std::int64_t x1, std::int64_t x2) noexcept {
  if (x2 <= x1) return;
  std::uint64_t* row = words_.data() + static_cast<std::size_t>(y) * words_per_row_;
  const std::int64_t first = x1 / 64, last = (x2 - 1) / 64;
  const std::uint64_t head = ~std::uint64_t{0} << (x1 % 64);
  const std::uint64_t tail = ~std::uint64_t{0} >> (63 - (x2 - 1) % 64);
  if (first == last) {
    row[first] |= head & tail;
    return;
  }
  row[first] |= head;
  for (std::int64_t k = first + 1; k < last; ++k) row[k] = ~std::uint64_t{0};
  row[last] |= tail;
}

std::int64_t BinaryMask::count() const noexcept {
  std::int64_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

std::int64_t BinaryMask::count_and(const BinaryMask& other) const {
  if (!(frame_ == other.frame_)) fail(ErrorKind::Contract, "mask frames differ");
  std::int64_t n = 0;
  for (std::size_t k = 0; k < words_.size(); ++k) n += std::popcount(words_[k] & other.words_[k]);
  return n;
}

std::int64_t BinaryMask::count_or(const BinaryMask& other) const {
  if (!(frame_ == other.frame_)) fail(ErrorKind::Contract, "mask frames differ");
  std::int64_t n = 0;
  for (std::size_t k = 0; k < words_.size(); ++k) n += std::popcount(words_[k] | other.words_[k]);
  return n;
}

BinaryMask rasterize(const BoxSet& s) {
  BinaryMask mask(s.frame);
  for (const auto& b : s.clamped()) {
    for (std::int64_t y = b.y1; y < b.y2; ++y) mask.set_run(y, b.x1, b.x2);
  }
  return mask;
}

double multibox_iou(const BoxSet& pred, const BoxSet& gt) {
  if (!(pred.frame == gt.frame)) {
    fail(ErrorKind::Contract,
         "box set frames differ: " + std::to_string(pred.frame.width) + "x" +
             std::to_string(pred.frame.height) + " vs " + std::to_string(gt.frame.width) + "x" +
             std::to_string(gt.frame.height));
  }
  const BinaryMask mp = rasterize(pred);
  const BinaryMask mg = rasterize(gt);
  const std::int64_t uni = mp.count_or(mg);
  if (uni == 0) return 1.0;
  return static_cast<double>(mp.count_and(mg)) / static_cast<double>(uni);
}

double single_iou(const PixelBox& p, const PixelBox& g) noexcept {
  const PixelBox inter{std::max(p.x1, g.x1), std::max(p.y1, g.y1), std::min(p.x2, g.x2),
                       std::min(p.y2, g.y2)};
  const std::int64_t i = inter.area();
  const std::int64_t u = p.area() + g.area() - i;
  return u == 0 ? 0.0 : static_cast<double>(i) / static_cast<double>(u);
}

double kappa(const AgreementTable& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) {
    fail(ErrorKind::Validation, "agreement counts must be non-negative");
  }
  const std::int64_t n = t.total();
  if (n < 1) fail(ErrorKind::Validation, "agreement table is empty");

  // Exact integer marginals; only the final ratios are floating point.
  const std::int64_t agree = t.a + t.d;
  const wide_int chance = static_cast<wide_int>(t.a + t.b) * (t.a + t.c) +
                          static_cast<wide_int>(t.c + t.d) * (t.b + t.d);
  const wide_int n2 = static_cast<wide_int>(n) * n;
  if (chance == n2) {
    if (agree == n) return 1.0;
    fail(ErrorKind::Degenerate, "kappa undefined: chance agreement is 1 but observed is " +
                                    std::to_string(static_cast<double>(agree) / n));
  }
  const double po = static_cast<double>(agree) / static_cast<double>(n);
  const double pe = static_cast<double>(chance) / static_cast<double>(n2);
  return (po - pe) / (1.0 - pe);
}

double sts_cosine(std::span<const float> v1, std::span<const float> v2) { return cosine(v1, v2); }

}  // namespace chartattrib
