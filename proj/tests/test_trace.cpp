#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "ltc/error.hpp"
#include "ltc/trace.hpp"

using namespace ltc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ltc_trace_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("empty trace writes a zero-length data file") {
  const auto dir = scratch("empty");
  Trace t;
  t.dim = 4;
  t.steps = 10;
  t.seeds = 0;
  write_trace(dir / "empty.trace", t);
  CHECK(fs::file_size(dir / "empty.f32") == 0);
  const auto back = read_trace(dir / "empty.trace");
  CHECK(back.seeds == 0);
  CHECK(back.dim == 4);
  CHECK(back.values.empty());
}

TEST_CASE("round trip is bit exact, including special values") {
  const auto dir = scratch("roundtrip");
  std::mt19937 rng(9);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 20; ++trial) {
    Trace t;
    t.dim = 3;
    t.steps = 2;
    t.seeds = 1 + trial % 3;
    for (std::size_t i = 0; i < t.expected_size(); ++i) {
      std::uint32_t w = bits(rng);
      float f;
      std::memcpy(&f, &w, 4);
      t.values.push_back(f);  // arbitrary patterns: NaN payloads, denormals, infinities
    }
    write_trace(dir / "t.trace", t);
    const auto back = read_trace(dir / "t.trace");
    REQUIRE(back.values.size() == t.values.size());
    CHECK(std::memcmp(back.values.data(), t.values.data(), 4 * t.values.size()) == 0);
  }
}

TEST_CASE("data file is little-endian float32 in seed, step, dim order") {
  const auto dir = scratch("layout");
  Trace t;
  t.dim = 1;
  t.steps = 2;
  t.seeds = 1;
  t.values = {1.0f, -2.0f};
  write_trace(dir / "l.trace", t);
  const auto bytes = file_bytes(dir / "l.f32");
  REQUIRE(bytes.size() == 8);
  // 1.0f = 0x3f800000, -2.0f = 0xc0000000
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[3] == 0x3f);
  CHECK(bytes[2] == 0x80);
  CHECK(bytes[7] == 0xc0);
  CHECK(t.at(0, 2)[0] == 1.0f);  // step T is stored first
  CHECK(t.at(0, 1)[0] == -2.0f);
}

TEST_CASE("manifest carries the documented fields") {
  const auto dir = scratch("manifest");
  Trace t;
  t.dim = 2;
  t.steps = 1;
  t.seeds = 1;
  t.values = {0.5f, 0.25f};
  write_trace(dir / "m.trace", t);
  const auto m = read_manifest(dir / "m.trace");
  CHECK(m.dim == 2);
  CHECK(m.steps == 1);
  CHECK(m.seeds == 1);
  CHECK(m.data == "m.f32");
  const auto bytes = file_bytes(dir / "m.f32");
  CHECK(m.crc32 == crc32_bytes(bytes));
}

TEST_CASE("crc32 matches the standard check value") {
  const std::string s = "123456789";
  CHECK(crc32_bytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()}) == 0xCBF43926u);
}

TEST_CASE("corrupted byte is a checksum error") {
  const auto dir = scratch("corrupt");
  Trace t;
  t.dim = 3;
  t.steps = 2;
  t.seeds = 1;
  t.values = {1, 2, 3, 4, 5, 6};
  write_trace(dir / "c.trace", t);
  {
    std::fstream f(dir / "c.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(5);
    f.put(static_cast<char>(0x7f));
  }
  CHECK_THROWS_AS(read_trace(dir / "c.trace"), ChecksumMismatch);
}

TEST_CASE("truncated data file is an I/O error") {
  const auto dir = scratch("truncated");
  Trace t;
  t.dim = 3;
  t.steps = 2;
  t.seeds = 1;
  t.values = {1, 2, 3, 4, 5, 6};
  write_trace(dir / "c.trace", t);
  fs::resize_file(dir / "c.f32", 20);
  CHECK_THROWS_AS(read_trace(dir / "c.trace"), IoError);
}

TEST_CASE("malformed manifests are rejected") {
  const auto dir = scratch("malformed");
  const auto write = [&](const std::string& body) {
    std::ofstream(dir / "x.trace") << body;
    std::ofstream(dir / "x.f32");
  };
  write("dim = 1\nsteps = 1\nseeds = 0\ndata = x.f32\nendian = big\ncrc32 = 0\n");
  CHECK_THROWS_AS(read_trace(dir / "x.trace"), IoError);
  write("dim = 1\nsteps = 1\nseeds = 0\ndata = x.f32\nendian = little\n");
  CHECK_THROWS_AS(read_trace(dir / "x.trace"), IoError);
  write("dim = 1\nsteps = 1\nseeds = 0\ndata = x.f32\nendian = little\ncrc32 = 0\ncolor = red\n");
  CHECK_THROWS_AS(read_trace(dir / "x.trace"), IoError);
  write("dim = one\nsteps = 1\nseeds = 0\ndata = x.f32\nendian = little\ncrc32 = 0\n");
  CHECK_THROWS_AS(read_trace(dir / "x.trace"), IoError);
  write("dim = 1\nsteps = 1\nseeds = 0\ndata = x.f32\nendian = little\ncrc32 = 0\n");
  CHECK_NOTHROW(read_trace(dir / "x.trace"));
  CHECK_THROWS_AS(read_trace(dir / "missing.trace"), IoError);
}

TEST_CASE("writer rejects inconsistent buffers") {
  const auto dir = scratch("inconsistent");
  Trace t;
  t.dim = 2;
  t.steps = 2;
  t.seeds = 1;
  t.values = {1.0f};
  CHECK_THROWS_AS(write_trace(dir / "bad.trace", t), ConfigError);
}
