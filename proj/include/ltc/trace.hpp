#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ltc {

// Noise predictions dumped from an external sampler. Values are ordered
// seed-major, then step (steps down to 1), then dimension.
struct Trace {
  int dim = 0;
  int steps = 0;
  int seeds = 0;
  std::vector<float> values;

  std::size_t expected_size() const;
  // Vector recorded for `seed` at trace step `step` (1 <= step <= steps).
  std::span<const float> at(std::size_t seed, int step) const;
};

// Text sidecar describing the raw little-endian float32 data file.
struct TraceManifest {
  int dim = 0;
  int steps = 0;
  int seeds = 0;
  std::string data;  // relative to the manifest's directory
  std::uint32_t crc32 = 0;
};

TraceManifest read_manifest(const std::filesystem::path& manifest_path);

// Writes `<manifest stem>.f32` next to the manifest and the manifest itself.
void write_trace(const std::filesystem::path& manifest_path, const Trace& trace);

// Loads and verifies length and checksum.
Trace read_trace(const std::filesystem::path& manifest_path);

std::uint32_t crc32_bytes(std::span<const unsigned char> bytes);

}  // namespace ltc
