#pragma once

// Reference implementations and synthetic fixtures. Nothing here reuses the
// fast paths it checks: the brute-force attributor sums every window patch
// by patch, and the exact IOU works on compressed coordinates instead of
// pixel masks.

#include <cstdint>
#include <random>
#include <vector>

#include "chartattrib/attribution.hpp"
#include "chartattrib/geometry.hpp"
#include "chartattrib/tensor_io.hpp"

namespace chartattrib {

struct PlantedRegion {
  GridRegion region;
  std::vector<float> signal;  // nonzero, length == dim
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t height = 35;
  std::size_t width = 35;
  std::size_t dim = 64;
  std::vector<PlantedRegion> planted;
  double noise = 0.0;
};

struct SyntheticFixture {
  EmbeddingGrid grid;
  QueryEmbedding query;
  /// Planted regions ordered by the cosine of their signal with the query
  /// (descending), then by the window tie order.
  std::vector<GridRegion> expected;
};

/// Deterministic for a given spec. Patches inside planted regions are
/// signal + noise * N(0,1); background patches are Gaussian draws projected
/// orthogonal to the query, plus the same noise. The query is the first
/// signal (a Gaussian draw when nothing is planted). Later planted regions
/// overwrite earlier ones where they overlap. Throws Validation on regions
/// outside the grid, zero or mis-sized signals, or negative noise.
SyntheticFixture gen_synthetic(const SyntheticSpec& spec);

/// Seeded standard normal draws: mt19937_64 bits through Box-Muller, so the
/// stream does not depend on the standard library's distribution classes.
class PortableGaussian {
 public:
  explicit PortableGaussian(std::uint64_t seed) : engine_(seed) {}
  double next();
  double uniform();  // [0, 1)
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Same contract as attribute_best, computed by direct per-window summation.
ScoredRegion brute_force_attribute(const EmbeddingGrid& g, const QueryEmbedding& q,
                                   const WindowConfig& cfg);

/// Multi-box IOU by coordinate compression over the boxes' x/y cuts, with
/// exact integer areas.
double exact_multibox_iou(const BoxSet& pred, const BoxSet& gt);

}  // namespace chartattrib
