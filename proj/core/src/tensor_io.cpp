#include "chartattrib/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "chartattrib/error.hpp"

namespace chartattrib {
namespace {

constexpr std::size_t kChunkValues = 1 << 16;

void put_u32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v);
  out[1] = static_cast<std::uint8_t>(v >> 8);
  out[2] = static_cast<std::uint8_t>(v >> 16);
  out[3] = static_cast<std::uint8_t>(v >> 24);
}

std::uint32_t get_u32(const std::uint8_t* in) {
  return std::uint32_t{in[0]} | (std::uint32_t{in[1]} << 8) |
         (std::uint32_t{in[2]} << 16) | (std::uint32_t{in[3]} << 24);
}

void check_values(const std::vector<float>& values, std::size_t first) {
  for (std::size_t k = first; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      fail(ErrorKind::Validation,
           "tensor value at flat index " + std::to_string(k) + " is not finite");
    }
  }
}

std::uint64_t checked_product(const std::vector<std::uint32_t>& dims) {
  std::uint64_t product = 1;
  for (auto d : dims) {
    if (d != 0 && product > kMaxTensorElements / d) {
      fail(ErrorKind::Capacity, "tensor dim product exceeds " +
                                    std::to_string(kMaxTensorElements) +
                                    " elements");
    }
    product *= d;
  }
  return product;
}

void read_exact(std::istream& in, std::uint8_t* dst, std::size_t n,
                std::size_t offset, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    fail(ErrorKind::Io, std::string("truncated tensor stream while reading ") +
                            what + " at byte offset " +
                            std::to_string(offset + static_cast<std::size_t>(in.gcount())));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> dims, std::vector<float> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (dims_.empty() || dims_.size() > 3) {
    fail(ErrorKind::Validation,
         "tensor rank must be 1..3, got " + std::to_string(dims_.size()));
  }
  for (auto d : dims_) {
    if (d == 0) fail(ErrorKind::Validation, "tensor dims must be positive");
  }
  if (checked_product(dims_) != values_.size()) {
    fail(ErrorKind::Validation, "tensor holds " + std::to_string(values_.size()) +
                                    " values but dims require " +
                                    std::to_string(checked_product(dims_)));
  }
  check_values(values_, 0);
}

std::size_t encoded_size(const Tensor& t) noexcept {
  return 4 + 1 + 4 * t.rank() + 4 * t.size();
}

std::size_t write_tensor(const Tensor& t, std::ostream& sink) {
  std::size_t offset = 0;
  auto emit = [&](const std::uint8_t* data, std::size_t n) {
    sink.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!sink) {
      fail(ErrorKind::Io, "tensor write failed at byte offset " + std::to_string(offset));
    }
    offset += n;
  };

  std::array<std::uint8_t, 4 + 1 + 12> header{};
  std::copy(std::begin(kTensorMagic), std::end(kTensorMagic), header.begin());
  header[4] = static_cast<std::uint8_t>(t.rank());
  for (std::size_t k = 0; k < t.rank(); ++k) put_u32(&header[5 + 4 * k], t.dims()[k]);
  emit(header.data(), 5 + 4 * t.rank());

  std::vector<std::uint8_t> buf;
  const auto& values = t.values();
  for (std::size_t start = 0; start < values.size(); start += kChunkValues) {
    const std::size_t n = std::min(kChunkValues, values.size() - start);
    buf.resize(4 * n);
    for (std::size_t k = 0; k < n; ++k) {
      put_u32(&buf[4 * k], std::bit_cast<std::uint32_t>(values[start + k]));
    }
    emit(buf.data(), buf.size());
  }
  sink.flush();
  if (!sink) fail(ErrorKind::Io, "tensor flush failed at byte offset " + std::to_string(offset));
  return offset;
}

Tensor read_tensor(std::istream& source) {
  std::size_t offset = 0;
  std::array<std::uint8_t, 5> head{};
  read_exact(source, head.data(), head.size(), offset, "header");
  if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), head.begin())) {
    fail(ErrorKind::Format, "bad tensor magic (expected \"RTN1\")");
  }
  const std::size_t rank = head[4];
  if (rank < 1 || rank > 3) {
    fail(ErrorKind::Format, "tensor rank must be 1..3, got " + std::to_string(rank));
  }
  offset += head.size();

  std::array<std::uint8_t, 12> dim_bytes{};
  read_exact(source, dim_bytes.data(), 4 * rank, offset, "dims");
  offset += 4 * rank;
  std::vector<std::uint32_t> dims(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    dims[k] = get_u32(&dim_bytes[4 * k]);
    if (dims[k] == 0) fail(ErrorKind::Format, "tensor dim " + std::to_string(k) + " is zero");
  }
  const std::uint64_t count = checked_product(dims);

  // Grow chunk by chunk so a lying header on a short stream fails on I/O
  // before it can force a huge allocation.
  std::vector<float> values;
  std::vector<std::uint8_t> buf;
  while (values.size() < count) {
    const std::size_t n = static_cast<std::size_t>(
        std::min<std::uint64_t>(kChunkValues, count - values.size()));
    buf.resize(4 * n);
    read_exact(source, buf.data(), buf.size(), offset, "values");
    offset += buf.size();
    const std::size_t first = values.size();
    for (std::size_t k = 0; k < n; ++k) {
      values.push_back(std::bit_cast<float>(get_u32(&buf[4 * k])));
    }
    check_values(values, first);
  }

  if (source.peek() != std::istream::traits_type::eof()) {
    fail(ErrorKind::Format,
         "trailing bytes after tensor payload at byte offset " + std::to_string(offset));
  }
  return Tensor(std::move(dims), std::move(values));
}

void write_tensor_file(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_tensor(t, out);
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return read_tensor(in);
}

EmbeddingGrid::EmbeddingGrid(std::size_t height, std::size_t width, std::size_t dim,
                             std::vector<float> values)
    : height_(height), width_(width), dim_(dim), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0 || dim_ == 0) {
    fail(ErrorKind::Validation, "embedding grid dimensions must be positive");
  }
  if (values_.size() != height_ * width_ * dim_) {
    fail(ErrorKind::Validation, "embedding grid value count does not match H*W*D");
  }
}

EmbeddingGrid grid_from_tensor(const Tensor& t) {
  if (t.rank() != 3) {
    fail(ErrorKind::Contract,
         "embedding grid needs a rank-3 tensor, got rank " + std::to_string(t.rank()));
  }
  return EmbeddingGrid(t.dims()[0], t.dims()[1], t.dims()[2], t.values());
}

QueryEmbedding query_from_tensor(const Tensor& t) {
  if (t.rank() != 1) {
    fail(ErrorKind::Contract,
         "query embedding needs a rank-1 tensor, got rank " + std::to_string(t.rank()));
  }
  return QueryEmbedding{t.values()};
}

Tensor to_tensor(const EmbeddingGrid& g) {
  return Tensor({static_cast<std::uint32_t>(g.height()), static_cast<std::uint32_t>(g.width()),
                 static_cast<std::uint32_t>(g.dim())},
                g.values());
}

Tensor to_tensor(const QueryEmbedding& q) {
  return Tensor({static_cast<std::uint32_t>(q.dim())}, q.values);
}

}  // namespace chartattrib
