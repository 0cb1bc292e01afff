#include "chartattrib/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chartattrib/error.hpp"

namespace chartattrib {
namespace {

bool region_inside(const GridRegion& r, std::size_t gh, std::size_t gw) {
  return r.h >= 1 && r.w >= 1 && r.i + r.h <= gh && r.j + r.w <= gw;
}

// Mirrors the documented ranking contract without calling into it.
bool oracle_better(double sa, const GridRegion& a, double sb, const GridRegion& b) {
  const auto ka = std::llround(std::ldexp(sa, 40));
  const auto kb = std::llround(std::ldexp(sb, 40));
  if (ka != kb) return ka > kb;
  if (a.h != b.h) return a.h < b.h;
  if (a.w != b.w) return a.w < b.w;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

struct Rect {
  std::int64_t x1, y1, x2, y2;
};

std::vector<Rect> clip_all(const std::vector<PixelBox>& boxes, const Frame& f) {
  std::vector<Rect> out;
  for (const auto& b : boxes) {
    Rect r{std::max<std::int64_t>(b.x1, 0), std::max<std::int64_t>(b.y1, 0),
           std::min<std::int64_t>(b.x2, f.width), std::min<std::int64_t>(b.y2, f.height)};
    if (r.x1 < r.x2 && r.y1 < r.y2) out.push_back(r);
  }
  return out;
}

bool covers(const std::vector<Rect>& rects, std::int64_t x, std::int64_t y) {
  return std::any_of(rects.begin(), rects.end(),
                     [&](const Rect& r) { return r.x1 <= x && x < r.x2 && r.y1 <= y && y < r.y2; });
}

}  // namespace

double PortableGaussian::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double PortableGaussian::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

SyntheticFixture gen_synthetic(const SyntheticSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.dim < 1) {
    fail(ErrorKind::Validation, "synthetic grid dimensions must be positive");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    fail(ErrorKind::Validation, "synthetic noise scale must be finite and >= 0");
  }
  for (std::size_t k = 0; k < spec.planted.size(); ++k) {
    const auto& p = spec.planted[k];
    if (!region_inside(p.region, spec.height, spec.width)) {
      fail(ErrorKind::Validation, "planted region " + std::to_string(k) + " lies outside the grid");
    }
    if (p.signal.size() != spec.dim) {
      fail(ErrorKind::Validation, "planted signal " + std::to_string(k) + " has dim " +
                                      std::to_string(p.signal.size()) + ", grid dim is " +
                                      std::to_string(spec.dim));
    }
    if (std::all_of(p.signal.begin(), p.signal.end(), [](float v) { return v == 0.0f; })) {
      fail(ErrorKind::Validation, "planted signal " + std::to_string(k) + " is zero");
    }
  }

  PortableGaussian rng(spec.seed);
  const std::size_t d = spec.dim;

  std::vector<double> query(d);
  if (spec.planted.empty()) {
    for (auto& v : query) v = rng.next();
  } else {
    std::copy(spec.planted.front().signal.begin(), spec.planted.front().signal.end(), query.begin());
  }
  double qq = 0.0;
  for (double v : query) qq += v * v;
  std::vector<double> unit(d, 0.0);
  if (qq > 0.0) {
    for (std::size_t k = 0; k < d; ++k) unit[k] = query[k] / std::sqrt(qq);
  }

  std::vector<float> values(spec.height * spec.width * d);
  std::vector<double> patch(d);
  for (std::size_t p = 0; p < spec.height * spec.width; ++p) {
    for (auto& v : patch) v = rng.next();
    double along = 0.0;
    for (std::size_t k = 0; k < d; ++k) along += patch[k] * unit[k];
    for (std::size_t k = 0; k < d; ++k) patch[k] -= along * unit[k];
    for (std::size_t k = 0; k < d; ++k) {
      values[p * d + k] = static_cast<float>(patch[k] + spec.noise * rng.next());
    }
  }
  for (const auto& planted : spec.planted) {
    const auto& r = planted.region;
    for (std::size_t row = r.i; row < r.i + r.h; ++row) {
      for (std::size_t col = r.j; col < r.j + r.w; ++col) {
        float* dst = values.data() + (row * spec.width + col) * d;
        for (std::size_t k = 0; k < d; ++k) {
          dst[k] = static_cast<float>(planted.signal[k] + spec.noise * rng.next());
        }
      }
    }
  }

  SyntheticFixture fx;
  fx.grid = EmbeddingGrid(spec.height, spec.width, d, std::move(values));
  fx.query.values.assign(query.begin(), query.end());

  std::vector<std::pair<double, GridRegion>> ranked;
  for (const auto& planted : spec.planted) {
    double dot = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dot += planted.signal[k] * unit[k];
      ss += double{planted.signal[k]} * planted.signal[k];
    }
    ranked.emplace_back(dot / std::sqrt(ss), planted.region);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return oracle_better(a.first, a.second, b.first, b.second);
  });
  for (const auto& [score, region] : ranked) fx.expected.push_back(region);
  return fx;
}

ScoredRegion brute_force_attribute(const EmbeddingGrid& g, const QueryEmbedding& q,
                                   const WindowConfig& cfg) {
  if (q.dim() != g.dim()) {
    fail(ErrorKind::Contract, "query dim " + std::to_string(q.dim()) +
                                  " does not match grid dim " + std::to_string(g.dim()));
  }
  if (cfg.min_size < 1 || cfg.max_size < cfg.min_size || cfg.stride < 1) {
    fail(ErrorKind::Contract, "invalid window config");
  }
  const std::size_t gh = g.height(), gw = g.width(), d = g.dim();
  const bool normalize = cfg.pooling == Pooling::NormalizeThenAverage;

  std::vector<double> pooled(gh * gw * d);
  for (std::size_t p = 0; p < gh * gw; ++p) {
    auto src = g.patch(p / gw, p % gw);
    double nn = 0.0;
    for (float v : src) nn += double{v} * v;
    // Match the single-precision patch storage the scanner integrates.
    for (std::size_t k = 0; k < d; ++k) {
      pooled[p * d + k] = (normalize && nn > 0.0)
                              ? double{static_cast<float>(src[k] * (1.0 / std::sqrt(nn)))}
                              : double{src[k]};
    }
  }
  double qq = 0.0;
  for (float v : q.values) qq += double{v} * v;

  bool found = false;
  ScoredRegion best;
  std::vector<double> sum(d);
  for (std::size_t h = cfg.min_size; h <= cfg.max_size && h <= gh; ++h) {
    for (std::size_t w = cfg.min_size; w <= cfg.max_size && w <= gw; ++w) {
      if (cfg.square_only && w != h) continue;
      for (std::size_t i = 0; i + h <= gh; i += cfg.stride) {
        for (std::size_t j = 0; j + w <= gw; j += cfg.stride) {
          std::fill(sum.begin(), sum.end(), 0.0);
          for (std::size_t row = i; row < i + h; ++row) {
            for (std::size_t col = j; col < j + w; ++col) {
              const double* v = pooled.data() + (row * gw + col) * d;
              for (std::size_t k = 0; k < d; ++k) sum[k] += v[k];
            }
          }
          double dot = 0.0, mm = 0.0;
          const double n = static_cast<double>(h * w);
          for (std::size_t k = 0; k < d; ++k) {
            const double mean = sum[k] / n;
            dot += mean * q.values[k];
            mm += mean * mean;
          }
          const double score = (mm == 0.0 || qq == 0.0) ? 0.0 : dot / (std::sqrt(mm) * std::sqrt(qq));
          const GridRegion r{i, j, h, w};
          if (!found || oracle_better(score, r, best.score, best.region)) {
            best = {r, score};
            found = true;
          }
        }
      }
    }
  }
  if (!found) fail(ErrorKind::NoCandidate, "window config admits no window on this grid");
  return best;
}

double exact_multibox_iou(const BoxSet& pred, const BoxSet& gt) {
  if (!(pred.frame == gt.frame)) fail(ErrorKind::Contract, "box set frames differ");
  const auto p = clip_all(pred.boxes, pred.frame);
  const auto g = clip_all(gt.boxes, gt.frame);

  std::vector<std::int64_t> xs, ys;
  for (const auto* set : {&p, &g}) {
    for (const auto& r : *set) {
      xs.insert(xs.end(), {r.x1, r.x2});
      ys.insert(ys.end(), {r.y1, r.y2});
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  std::int64_t inter = 0, uni = 0;
  for (std::size_t a = 0; a + 1 < xs.size(); ++a) {
    for (std::size_t b = 0; b + 1 < ys.size(); ++b) {
      // Each compressed cell is uniformly covered; probe its top-left pixel.
      const bool in_p = covers(p, xs[a], ys[b]);
      const bool in_g = covers(g, xs[a], ys[b]);
      const std::int64_t area = (xs[a + 1] - xs[a]) * (ys[b + 1] - ys[b]);
      if (in_p && in_g) inter += area;
      if (in_p || in_g) uni += area;
    }
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace chartattrib
