#pragma once

// RTN1 tensor files: the interchange format between the engine and any
// external hidden-state extractor.
//
//   offset 0   "RTN1"                       4 bytes magic
//   offset 4   rank                         1 byte, 1..3
//   offset 5   dims[rank]                   uint32 little-endian each
//   then       values[prod(dims)]           IEEE-754 binary32 little-endian,
//                                           row-major (last dim fastest)
//
// Nothing may follow the last value.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace chartattrib {

inline constexpr std::uint8_t kTensorMagic[4] = {0x52, 0x54, 0x4E, 0x31};

/// Refuses headers that promise more than this many values (16 GiB of floats).
inline constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 32;

class Tensor {
 public:
  Tensor() = default;
  /// Throws Validation if the value count differs from the dim product, the
  /// rank is outside 1..3, a dim is zero, or a value is non-finite.
  Tensor(std::vector<std::uint32_t> dims, std::vector<float> values);

  std::size_t rank() const noexcept { return dims_.size(); }
  const std::vector<std::uint32_t>& dims() const noexcept { return dims_; }
  const std::vector<float>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::uint32_t> dims_;
  std::vector<float> values_;
};

/// Returns the number of bytes emitted. Throws Io (with byte offset) when the
/// sink fails.
std::size_t write_tensor(const Tensor& t, std::ostream& sink);
Tensor read_tensor(std::istream& source);

std::size_t encoded_size(const Tensor& t) noexcept;

void write_tensor_file(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor_file(const std::filesystem::path& path);

/// H x W grid of D-dimensional patch embeddings, row-major.
class EmbeddingGrid {
 public:
  EmbeddingGrid() = default;
  EmbeddingGrid(std::size_t height, std::size_t width, std::size_t dim,
                std::vector<float> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> patch(std::size_t row, std::size_t col) const noexcept {
    return {values_.data() + (row * width_ + col) * dim_, dim_};
  }
  std::span<float> patch(std::size_t row, std::size_t col) noexcept {
    return {values_.data() + (row * width_ + col) * dim_, dim_};
  }
  const std::vector<float>& values() const noexcept { return values_; }

  friend bool operator==(const EmbeddingGrid&, const EmbeddingGrid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Text-side embedding compared against grid windows.
struct QueryEmbedding {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const QueryEmbedding&, const QueryEmbedding&) = default;
};

/// Rank-3 tensor (H, W, D) -> grid. Throws Contract on other ranks.
EmbeddingGrid grid_from_tensor(const Tensor& t);
/// Rank-1 tensor (D) -> query. Throws Contract on other ranks.
QueryEmbedding query_from_tensor(const Tensor& t);

Tensor to_tensor(const EmbeddingGrid& g);
Tensor to_tensor(const QueryEmbedding& q);

}  // namespace chartattrib
