#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "chartattrib/error.hpp"
#include "chartattrib/tensor_io.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chartattrib;

namespace {

std::string encode(const Tensor& t) {
  std::ostringstream out(std::ios::binary);
  write_tensor(t, out);
  return out.str();
}

Tensor decode(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_tensor(in);
}

ErrorKind decode_error(const std::string& bytes) {
  try {
    decode(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorKind::Io;
}

std::string minimal_bytes() {
  return std::string("RTN1\x01\x01\x00\x00\x00\x00\x00\x80\x3F", 13);
}

}  // namespace

TEST_CASE("minimal rank-1 tensor encodes to the 13 specified bytes") {
  const Tensor t({1}, {1.0f});
  const std::string bytes = encode(t);
  CHECK(bytes.size() == 13);
  CHECK(bytes == minimal_bytes());
  CHECK(decode(bytes) == t);
}

TEST_CASE("write returns the byte count: header then payload") {
  const Tensor t({2, 2, 1}, {1, 2, 3, 4});
  std::ostringstream out(std::ios::binary);
  CHECK(write_tensor(t, out) == 4 + 1 + 12 + 16);
  CHECK(out.str().size() == 33);
  CHECK(encoded_size(t) == 33);
  // dims little-endian
  CHECK(out.str().substr(5, 4) == std::string("\x02\x00\x00\x00", 4));
}

TEST_CASE("round trip is bitwise on 100 random tensors") {
  PortableGaussian rng(2024);
  for (int n = 0; n < 100; ++n) {
    const std::size_t rank = 1 + rng.next_u64() % 3;
    std::vector<std::uint32_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
      d = 1 + static_cast<std::uint32_t>(rng.next_u64() % 9);
      count *= d;
    }
    std::vector<float> values(count);
    for (auto& v : values) {
      // Arbitrary finite bit patterns, including subnormals and -0.
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64()));
      } while (!std::isfinite(f));
      v = f;
    }
    const Tensor t(dims, values);
    const Tensor back = decode(encode(t));
    REQUIRE(back.dims() == t.dims());
    for (std::size_t k = 0; k < count; ++k) {
      REQUIRE(std::bit_cast<std::uint32_t>(back.values()[k]) ==
              std::bit_cast<std::uint32_t>(t.values()[k]));
    }
  }
}

TEST_CASE("read rejects malformed streams") {
  SUBCASE("bad magic") {
    std::string bytes = minimal_bytes();
    bytes.replace(0, 4, "XXXX");
    CHECK(decode_error(bytes) == ErrorKind::Format);
  }
  SUBCASE("NaN payload names index 0") {
    std::string bytes = minimal_bytes();
    bytes.replace(9, 4, std::string("\x00\x00\xC0\x7F", 4));
    try {
      decode(bytes);
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      CHECK(std::string(e.what()).find("index 0") != std::string::npos);
    }
  }
  SUBCASE("infinity at a later index") {
    const Tensor t({3}, {1, 2, 3});
    std::string bytes = encode(t);
    bytes.replace(5 + 4 + 8, 4, std::string("\x00\x00\x80\x7F", 4));
    try {
      decode(bytes);
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }
  }
  SUBCASE("truncated payload") {
    std::string bytes = minimal_bytes();
    bytes.pop_back();
    CHECK(decode_error(bytes) == ErrorKind::Io);
  }
  SUBCASE("truncated header") { CHECK(decode_error("RTN") == ErrorKind::Io); }
  SUBCASE("trailing garbage") { CHECK(decode_error(minimal_bytes() + "z") == ErrorKind::Format); }
  SUBCASE("rank out of range") {
    std::string bytes = minimal_bytes();
    bytes[4] = 4;
    CHECK(decode_error(bytes) == ErrorKind::Format);
  }
  SUBCASE("zero dim") {
    CHECK(decode_error(std::string("RTN1\x01\x00\x00\x00\x00", 9)) == ErrorKind::Format);
  }
  SUBCASE("dim product overflow") {
    const std::string bytes("RTN1\x03\xFF\xFF\xFF\xFF\xFF\xFF\xFF\xFF\xFF\xFF\xFF\xFF", 17);
    CHECK(decode_error(bytes) == ErrorKind::Capacity);
  }
  SUBCASE("huge but representable header on a short stream fails on I/O") {
    const std::string bytes("RTN1\x02\x00\x00\x01\x00\x00\x80\x00\x00", 13);
    CHECK(decode_error(bytes) == ErrorKind::Io);
  }
}

TEST_CASE("tensor constructor enforces invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor({}, {}), Error);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<float>::quiet_NaN()}), Error);
}

TEST_CASE("failing sink reports an I/O error") {
  std::ostringstream out;
  out.setstate(std::ios::badbit);
  try {
    write_tensor(Tensor({1}, {1.0f}), out);
    FAIL("expected I/O error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }
}

TEST_CASE("grid and query conversions check rank") {
  const Tensor g({2, 3, 4}, std::vector<float>(24, 0.5f));
  const EmbeddingGrid grid = grid_from_tensor(g);
  CHECK(grid.height() == 2);
  CHECK(grid.width() == 3);
  CHECK(grid.dim() == 4);
  CHECK(to_tensor(grid) == g);
  CHECK_THROWS_AS(query_from_tensor(g), Error);
  CHECK_THROWS_AS(grid_from_tensor(Tensor({4}, {1, 2, 3, 4})), Error);
  CHECK(query_from_tensor(Tensor({4}, {1, 2, 3, 4})).dim() == 4);
}

TEST_CASE("file helpers round trip and report missing files") {
  const auto dir = chartattrib::testing::scratch_dir("tensor");
  const Tensor t({2, 1}, {0.25f, -3.5f});
  write_tensor_file(t, dir / "t.rtn");
  CHECK(read_tensor_file(dir / "t.rtn") == t);
  try {
    read_tensor_file(dir / "missing.rtn");
    FAIL("expected I/O error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
