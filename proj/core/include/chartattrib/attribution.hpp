#pragma once

// Sliding-window attribution over a patch-embedding grid.
//
// Every admissible window is scored by the cosine between the mean of its
// (L2-normalized) patch embeddings and a text query embedding. Window sums
// come from a double-precision summed-area table, so each window costs
// O(D) regardless of its area.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chartattrib/geometry.hpp"
#include "chartattrib/tensor_io.hpp"

namespace chartattrib {

enum class Pooling {
  NormalizeThenAverage,  // unit-normalize each patch, then average the window
  AverageOnly,           // average raw patch embeddings
};

struct WindowConfig {
  std::size_t min_size = 3;
  std::size_t max_size = 35;  // clamped to the grid
  bool square_only = true;
  std::size_t stride = 1;
  Pooling pooling = Pooling::NormalizeThenAverage;
};

/// Throws Contract unless 1 <= min_size <= max_size and stride >= 1.
void validate(const WindowConfig& cfg);

/// Every window the config admits on an H x W grid, in scan order
/// (h, then i, then w, then j ascending).
std::vector<GridRegion> enumerate_windows(std::size_t grid_h, std::size_t grid_w,
                                          const WindowConfig& cfg);
std::size_t count_windows(std::size_t grid_h, std::size_t grid_w, const WindowConfig& cfg);

/// Scales each nonzero patch to unit L2 norm; zero patches stay zero.
EmbeddingGrid normalize_grid(const EmbeddingGrid& g);

inline constexpr std::size_t kDefaultIntegralBudgetBytes = std::size_t{1} << 30;

/// (H+1) x (W+1) x D prefix sums; entry (r, c, d) is the sum of grid values
/// over rows < r and columns < c at dimension d.
class IntegralGrid {
 public:
  IntegralGrid() = default;

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> at(std::size_t r, std::size_t c) const noexcept {
    return {table_.data() + (r * (width_ + 1) + c) * dim_, dim_};
  }
  double at(std::size_t r, std::size_t c, std::size_t d) const noexcept {
    return table_[(r * (width_ + 1) + c) * dim_ + d];
  }

 private:
  friend IntegralGrid build_integral(const EmbeddingGrid&, std::size_t);

  std::size_t height_ = 0;  // of the source grid
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> table_;
};

/// Throws Capacity when the table would exceed budget_bytes.
IntegralGrid build_integral(const EmbeddingGrid& g,
                            std::size_t budget_bytes = kDefaultIntegralBudgetBytes);

/// Mean of the window's patches from four table lookups per dimension.
/// Throws Bounds when the region does not fit the grid.
std::vector<double> window_mean(const IntegralGrid& ig, const GridRegion& r);

/// dot(a, b) / (|a| |b|) accumulated in double; 0 when either norm is 0.
/// Throws Contract on a length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

struct ScoredRegion {
  GridRegion region;
  double score = 0.0;

  friend bool operator==(const ScoredRegion&, const ScoredRegion&) = default;
};

/// Scores are ranked on a 2^-40 grid so that summation-order rounding cannot
/// split windows whose scores are mathematically equal.
std::int64_t score_key(double score) noexcept;

/// Ranking order of a result list: higher score first, then tie_order_less.
bool ranks_before(const ScoredRegion& a, const ScoredRegion& b) noexcept;

struct ScanOptions {
  unsigned jobs = 1;
  std::size_t integral_budget_bytes = kDefaultIntegralBudgetBytes;
};

/// Prepared grid: pools and integrates once, then answers any number of
/// queries. Immutable after construction and safe to share across threads.
class WindowScorer {
 public:
  WindowScorer(const EmbeddingGrid& grid, const WindowConfig& cfg, ScanOptions opts = {});

  std::size_t grid_height() const noexcept { return integral_.height(); }
  std::size_t grid_width() const noexcept { return integral_.width(); }
  std::size_t dim() const noexcept { return integral_.dim(); }
  std::size_t window_count() const noexcept { return window_count_; }
  const WindowConfig& config() const noexcept { return cfg_; }

  /// Scores of all admitted windows in scan order.
  std::vector<ScoredRegion> score_all(const QueryEmbedding& q) const;
  ScoredRegion best(const QueryEmbedding& q) const;
  /// Greedy non-maximum suppression: take the best remaining window, drop
  /// every window whose grid IOU with a taken one exceeds nms_iou.
  std::vector<ScoredRegion> topk(const QueryEmbedding& q, std::size_t k, double nms_iou) const;

 private:
  struct RowBand {
    std::size_t h;
    std::size_t i;
    std::size_t first_slot;
  };

  void check_query(const QueryEmbedding& q) const;

  WindowConfig cfg_;
  ScanOptions opts_;
  IntegralGrid integral_;
  std::vector<RowBand> bands_;
  std::size_t window_count_ = 0;
};

ScoredRegion attribute_best(const EmbeddingGrid& g, const QueryEmbedding& q,
                            const WindowConfig& cfg, ScanOptions opts = {});

std::vector<ScoredRegion> attribute_topk(const EmbeddingGrid& g, const QueryEmbedding& q,
                                         const WindowConfig& cfg, std::size_t k,
                                         double nms_iou, ScanOptions opts = {});

/// Grid region -> half-open pixel box. Scale sx = img_w / grid_w (exact
/// rational): x1 = floor(j sx), x2 = ceil((j + w) sx), likewise for y.
/// Throws Contract when the image is smaller than the grid, Bounds when the
/// region does not fit.
PixelBox grid_to_pixels(const GridRegion& r, std::size_t grid_h, std::size_t grid_w,
                        std::size_t img_w, std::size_t img_h);

}  // namespace chartattrib
