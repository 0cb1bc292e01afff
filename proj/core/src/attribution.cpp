#include "chartattrib/attribution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "chartattrib/error.hpp"

namespace chartattrib {
namespace {

struct SizeRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive; lo > hi means empty
  bool empty() const noexcept { return lo > hi; }
};

SizeRange height_range(std::size_t grid_h, std::size_t grid_w, const WindowConfig& cfg) {
  const std::size_t cap = cfg.square_only ? std::min(grid_h, grid_w) : grid_h;
  return {cfg.min_size, std::min(cfg.max_size, cap)};
}

SizeRange width_range(std::size_t h, std::size_t grid_w, const WindowConfig& cfg) {
  if (cfg.square_only) return {h, h};
  return {cfg.min_size, std::min(cfg.max_size, grid_w)};
}

std::size_t positions(std::size_t extent, std::size_t size, std::size_t stride) {
  return size > extent ? 0 : (extent - size) / stride + 1;
}

std::string region_text(const GridRegion& r) {
  return "(" + std::to_string(r.i) + "," + std::to_string(r.j) + "," + std::to_string(r.h) +
         "," + std::to_string(r.w) + ")";
}

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Contract, "cosine of vectors with dims " + std::to_string(a.size()) +
                                  " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Runs body(index) for index in [0, n) on `jobs` threads. Work items write to
// disjoint output slots, so scheduling order never shows in the results.
template <typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) body(k);
    });
  }
}

}  // namespace

void validate(const WindowConfig& cfg) {
  if (cfg.min_size < 1) fail(ErrorKind::Contract, "window min_size must be >= 1");
  if (cfg.max_size < cfg.min_size) {
    fail(ErrorKind::Contract, "window max_size (" + std::to_string(cfg.max_size) +
                                  ") is below min_size (" + std::to_string(cfg.min_size) + ")");
  }
  if (cfg.stride < 1) fail(ErrorKind::Contract, "window stride must be >= 1");
}

std::vector<GridRegion> enumerate_windows(std::size_t grid_h, std::size_t grid_w,
                                          const WindowConfig& cfg) {
  validate(cfg);
  std::vector<GridRegion> out;
  const SizeRange hs = height_range(grid_h, grid_w, cfg);
  for (std::size_t h = hs.lo; !hs.empty() && h <= hs.hi; ++h) {
    for (std::size_t i = 0; i + h <= grid_h; i += cfg.stride) {
      const SizeRange ws = width_range(h, grid_w, cfg);
      for (std::size_t w = ws.lo; !ws.empty() && w <= ws.hi; ++w) {
        for (std::size_t j = 0; j + w <= grid_w; j += cfg.stride) out.push_back({i, j, h, w});
      }
    }
  }
  return out;
}

std::size_t count_windows(std::size_t grid_h, std::size_t grid_w, const WindowConfig& cfg) {
  validate(cfg);
  std::size_t n = 0;
  const SizeRange hs = height_range(grid_h, grid_w, cfg);
  for (std::size_t h = hs.lo; !hs.empty() && h <= hs.hi; ++h) {
    std::size_t per_row = 0;
    const SizeRange ws = width_range(h, grid_w, cfg);
    for (std::size_t w = ws.lo; !ws.empty() && w <= ws.hi; ++w) {
      per_row += positions(grid_w, w, cfg.stride);
    }
    n += positions(grid_h, h, cfg.stride) * per_row;
  }
  return n;
}

EmbeddingGrid normalize_grid(const EmbeddingGrid& g) {
  std::vector<float> values(g.values());
  const std::size_t d = g.dim();
  for (std::size_t p = 0; p < g.height() * g.width(); ++p) {
    float* v = values.data() + p * d;
    double nn = 0.0;
    for (std::size_t k = 0; k < d; ++k) nn += double{v[k]} * v[k];
    if (nn == 0.0) continue;
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t k = 0; k < d; ++k) v[k] = static_cast<float>(v[k] * inv);
  }
  return EmbeddingGrid(g.height(), g.width(), d, std::move(values));
}

IntegralGrid build_integral(const EmbeddingGrid& g, std::size_t budget_bytes) {
  const std::size_t h = g.height(), w = g.width(), d = g.dim();
  const long double need = static_cast<long double>(h + 1) * (w + 1) * d * sizeof(double);
  if (need > static_cast<long double>(budget_bytes)) {
    fail(ErrorKind::Capacity, "integral table needs " +
                                  std::to_string(static_cast<unsigned long long>(need)) +
                                  " bytes, budget is " + std::to_string(budget_bytes));
  }
  IntegralGrid ig;
  ig.height_ = h;
  ig.width_ = w;
  ig.dim_ = d;
  ig.table_.assign((h + 1) * (w + 1) * d, 0.0);

  const std::size_t row_stride = (w + 1) * d;
  std::vector<double> running(d);
  for (std::size_t r = 1; r <= h; ++r) {
    std::fill(running.begin(), running.end(), 0.0);
    double* row = ig.table_.data() + r * row_stride;
    const double* above = row - row_stride;
    for (std::size_t c = 1; c <= w; ++c) {
      auto src = g.patch(r - 1, c - 1);
      double* cell = row + c * d;
      const double* cell_above = above + c * d;
      for (std::size_t k = 0; k < d; ++k) {
        running[k] += src[k];
        cell[k] = cell_above[k] + running[k];
      }
    }
  }
  return ig;
}

std::vector<double> window_mean(const IntegralGrid& ig, const GridRegion& r) {
  if (!fits(r, ig.height(), ig.width())) {
    fail(ErrorKind::Bounds, "region " + region_text(r) + " outside " +
                                std::to_string(ig.height()) + "x" + std::to_string(ig.width()) +
                                " grid");
  }
  auto br = ig.at(r.i + r.h, r.j + r.w);
  auto bl = ig.at(r.i + r.h, r.j);
  auto tr = ig.at(r.i, r.j + r.w);
  auto tl = ig.at(r.i, r.j);
  const double n = static_cast<double>(r.area());
  std::vector<double> mean(ig.dim());
  for (std::size_t k = 0; k < mean.size(); ++k) mean[k] = ((br[k] - bl[k]) - (tr[k] - tl[k])) / n;
  return mean;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}
double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }

std::int64_t score_key(double score) noexcept {
  return std::llround(std::ldexp(score, 40));
}

bool ranks_before(const ScoredRegion& a, const ScoredRegion& b) noexcept {
  const auto ka = score_key(a.score), kb = score_key(b.score);
  if (ka != kb) return ka > kb;
  return tie_order_less(a.region, b.region);
}

WindowScorer::WindowScorer(const EmbeddingGrid& grid, const WindowConfig& cfg, ScanOptions opts)
    : cfg_(cfg), opts_(opts) {
  validate(cfg_);
  const std::size_t gh = grid.height(), gw = grid.width();
  const SizeRange hs = height_range(gh, gw, cfg_);
  for (std::size_t h = hs.lo; !hs.empty() && h <= hs.hi; ++h) {
    std::size_t per_band = 0;
    const SizeRange ws = width_range(h, gw, cfg_);
    for (std::size_t w = ws.lo; !ws.empty() && w <= ws.hi; ++w) {
      per_band += positions(gw, w, cfg_.stride);
    }
    if (per_band == 0) continue;
    for (std::size_t i = 0; i + h <= gh; i += cfg_.stride) {
      bands_.push_back({h, i, window_count_});
      window_count_ += per_band;
    }
  }
  if (window_count_ == 0) {
    fail(ErrorKind::NoCandidate,
         "no " + std::string(cfg_.square_only ? "square " : "") + "window of size " +
             std::to_string(cfg_.min_size) + ".." + std::to_string(cfg_.max_size) + " fits a " +
             std::to_string(gh) + "x" + std::to_string(gw) + " grid");
  }
  integral_ = cfg_.pooling == Pooling::NormalizeThenAverage
                  ? build_integral(normalize_grid(grid), opts_.integral_budget_bytes)
                  : build_integral(grid, opts_.integral_budget_bytes);
}

void WindowScorer::check_query(const QueryEmbedding& q) const {
  if (q.dim() != dim()) {
    fail(ErrorKind::Contract, "query dim " + std::to_string(q.dim()) +
                                  " does not match grid dim " + std::to_string(dim()));
  }
  for (std::size_t k = 0; k < q.values.size(); ++k) {
    if (!std::isfinite(q.values[k])) {
      fail(ErrorKind::Validation, "query value at index " + std::to_string(k) + " is not finite");
    }
  }
}

std::vector<ScoredRegion> WindowScorer::score_all(const QueryEmbedding& q) const {
  check_query(q);
  const std::size_t d = dim(), gw = grid_width();
  std::vector<double> query(q.values.begin(), q.values.end());
  double qq = 0.0;
  for (double v : query) qq += v * v;
  const double qnorm = std::sqrt(qq);

  std::vector<ScoredRegion> out(window_count_);
  parallel_for(bands_.size(), opts_.jobs, [&](std::size_t b) {
    const RowBand& band = bands_[b];
    // Column prefix sums of the band's rows: strip[c] = I(i+h, c) - I(i, c).
    std::vector<double> strip((gw + 1) * d);
    for (std::size_t c = 0; c <= gw; ++c) {
      auto lo = integral_.at(band.i, c);
      auto hi = integral_.at(band.i + band.h, c);
      double* s = strip.data() + c * d;
      for (std::size_t k = 0; k < d; ++k) s[k] = hi[k] - lo[k];
    }
    std::size_t slot = band.first_slot;
    const SizeRange ws = width_range(band.h, gw, cfg_);
    for (std::size_t w = ws.lo; w <= ws.hi; ++w) {
      for (std::size_t j = 0; j + w <= gw; j += cfg_.stride) {
        const double* right = strip.data() + (j + w) * d;
        const double* left = strip.data() + j * d;
        double dot[4] = {0, 0, 0, 0}, nn[4] = {0, 0, 0, 0};
        std::size_t k = 0;
        for (; k + 4 <= d; k += 4) {
          for (std::size_t u = 0; u < 4; ++u) {
            const double s = right[k + u] - left[k + u];
            dot[u] += s * query[k + u];
            nn[u] += s * s;
          }
        }
        for (; k < d; ++k) {
          const double s = right[k] - left[k];
          dot[0] += s * query[k];
          nn[0] += s * s;
        }
        const double dsum = (dot[0] + dot[1]) + (dot[2] + dot[3]);
        const double nsum = (nn[0] + nn[1]) + (nn[2] + nn[3]);
        const double score =
            (nsum == 0.0 || qnorm == 0.0) ? 0.0 : dsum / (std::sqrt(nsum) * qnorm);
        out[slot++] = {{band.i, j, band.h, w}, score};
      }
    }
  });
  return out;
}

ScoredRegion WindowScorer::best(const QueryEmbedding& q) const {
  const auto all = score_all(q);
  return *std::min_element(all.begin(), all.end(), ranks_before);
}

std::vector<ScoredRegion> WindowScorer::topk(const QueryEmbedding& q, std::size_t k,
                                             double nms_iou) const {
  if (k < 1) fail(ErrorKind::Contract, "top-k needs k >= 1");
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) {
    fail(ErrorKind::Contract, "nms_iou must lie in [0, 1]");
  }
  auto all = score_all(q);
  std::sort(all.begin(), all.end(), ranks_before);
  std::vector<ScoredRegion> picked;
  for (const auto& cand : all) {
    if (picked.size() == k) break;
    const bool suppressed = std::any_of(picked.begin(), picked.end(), [&](const ScoredRegion& p) {
      return region_iou(p.region, cand.region) > nms_iou;
    });
    if (!suppressed) picked.push_back(cand);
  }
  return picked;
}

ScoredRegion attribute_best(const EmbeddingGrid& g, const QueryEmbedding& q,
                            const WindowConfig& cfg, ScanOptions opts) {
  return WindowScorer(g, cfg, opts).best(q);
}

std::vector<ScoredRegion> attribute_topk(const EmbeddingGrid& g, const QueryEmbedding& q,
                                         const WindowConfig& cfg, std::size_t k,
                                         double nms_iou, ScanOptions opts) {
  return WindowScorer(g, cfg, opts).topk(q, k, nms_iou);
}

PixelBox grid_to_pixels(const GridRegion& r, std::size_t grid_h, std::size_t grid_w,
                        std::size_t img_w, std::size_t img_h) {
  if (img_w < grid_w || img_h < grid_h) {
    fail(ErrorKind::Contract, "image " + std::to_string(img_w) + "x" + std::to_string(img_h) +
                                  " is smaller than the " + std::to_string(grid_w) + "x" +
                                  std::to_string(grid_h) + " grid");
  }
  if (!fits(r, grid_h, grid_w)) {
    fail(ErrorKind::Bounds, "region " + region_text(r) + " outside " + std::to_string(grid_h) +
                                "x" + std::to_string(grid_w) + " grid");
  }
  auto floor_div = [](std::size_t num, std::size_t den) { return num / den; };
  auto ceil_div = [](std::size_t num, std::size_t den) { return (num + den - 1) / den; };
  PixelBox box{static_cast<std::int64_t>(floor_div(r.j * img_w, grid_w)),
               static_cast<std::int64_t>(floor_div(r.i * img_h, grid_h)),
               static_cast<std::int64_t>(std::min(ceil_div((r.j + r.w) * img_w, grid_w), img_w)),
               static_cast<std::int64_t>(std::min(ceil_div((r.i + r.h) * img_h, grid_h), img_h))};
  return box;
}

}  // namespace chartattrib
