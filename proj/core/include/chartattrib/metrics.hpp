#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chartattrib/geometry.hpp"

namespace chartattrib {

/// One bit per pixel, row-major, each row padded to a whole 64-bit word.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Frame frame);

  const Frame& frame() const noexcept { return frame_; }
  bool test(std::int64_t x, std::int64_t y) const noexcept;
  void set(std::int64_t x, std::int64_t y) noexcept;
  /// Sets the half-open pixel run [x1, x2) of row y.
  void set_run(std::int64_t y, std::int64_t x1, std::int64_t x2) noexcept;

  std::int64_t count() const noexcept;
  std::int64_t count_and(const BinaryMask& other) const;
  std::int64_t count_or(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Frame frame_;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Union of the set's boxes (clamped to the frame) as a pixel mask.
BinaryMask rasterize(const BoxSet& s);

/// |Mp & Mgt| / |Mp | Mgt|. 1.0 when both masks are empty, 0.0 when exactly
/// one is. Throws Contract when the frames differ.
double multibox_iou(const BoxSet& pred, const BoxSet& gt);

/// Closed-form rectangle IOU; 0 when disjoint or touching.
double single_iou(const PixelBox& p, const PixelBox& g) noexcept;

/// 2x2 yes/no agreement counts of two annotators.
struct AgreementTable {
  std::int64_t a = 0;  // both yes
  std::int64_t b = 0;  // first yes, second no
  std::int64_t c = 0;  // first no, second yes
  std::int64_t d = 0;  // both no

  std::int64_t total() const noexcept { return a + b + c + d; }
};

/// Cohen's kappa. Returns 1.0 when chance agreement and observed agreement
/// are both 1; throws Degenerate when chance agreement is 1 but observed is
/// not, Validation on negative counts or an empty table.
double kappa(const AgreementTable& t);

/// Semantic textual similarity of two sentence embeddings: their cosine.
double sts_cosine(std::span<const float> v1, std::span<const float> v2);

}  // namespace chartattrib
