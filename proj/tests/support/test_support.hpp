#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chartattrib/dataset.hpp"
#include "chartattrib/tensor_io.hpp"
#include "chartattrib/verification.hpp"

namespace chartattrib::testing {

std::filesystem::path data_dir();
std::filesystem::path sample_dir();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Grid of independent N(0,1) entries.
EmbeddingGrid random_grid(PortableGaussian& rng, std::size_t h, std::size_t w, std::size_t d);
QueryEmbedding random_query(PortableGaussian& rng, std::size_t d);

/// Counts straight from the manifest JSON, sharing nothing with
/// compute_stats: per type {charts, qa, steps, qa regions, step regions}.
struct RawCounts {
  std::int64_t c[3][5] = {};
  std::int64_t grand = 0;
};
RawCounts walk_manifest_json(const std::filesystem::path& manifest);

std::string read_file(const std::filesystem::path& p);

}  // namespace chartattrib::testing
