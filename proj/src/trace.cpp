#include "ltc/trace.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>
#include <zlib.h>

#include "ltc/error.hpp"

namespace ltc {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

int parse_count(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || n < 0) {
    throw IoError(fmt::format("manifest field '{}' is not a count: '{}'", key, value));
  }
  return n;
}

std::vector<unsigned char> encode_le(const std::vector<float>& values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto word = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) {
      bytes[4 * i + static_cast<std::size_t>(b)] = static_cast<unsigned char>(word >> (8 * b));
    }
  }
  return bytes;
}

}  // namespace

std::size_t Trace::expected_size() const {
  return static_cast<std::size_t>(seeds) * static_cast<std::size_t>(steps) *
         static_cast<std::size_t>(dim);
}

std::span<const float> Trace::at(std::size_t seed, int step) const {
  if (seed >= static_cast<std::size_t>(seeds) || step < 1 || step > steps) {
    throw TraceExhausted(
        fmt::format("no recorded prediction for seed {} step {} (trace has {} seeds x {} steps)",
                    seed, step, seeds, steps));
  }
  // steps are stored from `steps` down to 1
  const std::size_t row = seed * static_cast<std::size_t>(steps) +
                          static_cast<std::size_t>(steps - step);
  return std::span<const float>(values).subspan(row * static_cast<std::size_t>(dim),
                                                static_cast<std::size_t>(dim));
}

std::uint32_t crc32_bytes(std::span<const unsigned char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

TraceManifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw IoError(fmt::format("cannot open trace manifest {}", manifest_path.string()));
  }
  std::map<std::string, std::string> fields;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw IoError(fmt::format("{}:{}: expected key = value", manifest_path.string(), line_no));
    }
    std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    if (!fields.emplace(key, value).second) {
      throw IoError(fmt::format("{}: duplicate field '{}'", manifest_path.string(), key));
    }
  }

  static const char* const kKeys[] = {"dim", "steps", "seeds", "data", "endian", "crc32"};
  for (const auto& [key, value] : fields) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw IoError(fmt::format("{}: unknown field '{}'", manifest_path.string(), key));
    }
  }
  for (const char* key : kKeys) {
    if (!fields.count(key)) {
      throw IoError(fmt::format("{}: missing field '{}'", manifest_path.string(), key));
    }
  }
  if (fields["endian"] != "little") {
    throw IoError(fmt::format("unsupported endianness '{}'", fields["endian"]));
  }

  TraceManifest m;
  m.dim = parse_count("dim", fields["dim"]);
  m.steps = parse_count("steps", fields["steps"]);
  m.seeds = parse_count("seeds", fields["seeds"]);
  m.data = fields["data"];
  try {
    std::size_t used = 0;
    const unsigned long crc = std::stoul(fields["crc32"], &used, 16);
    if (used != fields["crc32"].size() || crc > 0xffffffffUL) throw std::out_of_range("crc32");
    m.crc32 = static_cast<std::uint32_t>(crc);
  } catch (const std::exception&) {
    throw IoError(fmt::format("manifest field 'crc32' is not hex: '{}'", fields["crc32"]));
  }
  return m;
}

void write_trace(const std::filesystem::path& manifest_path, const Trace& trace) {
  if (trace.dim < 0 || trace.steps < 0 || trace.seeds < 0 ||
      trace.values.size() != trace.expected_size()) {
    throw ConfigError(fmt::format("trace holds {} values, header implies {}", trace.values.size(),
                                  trace.expected_size()));
  }
  const std::vector<unsigned char> bytes = encode_le(trace.values);
  const std::string data_name = manifest_path.stem().string() + ".f32";
  const auto data_path = manifest_path.parent_path() / data_name;

  std::ofstream data(data_path, std::ios::binary | std::ios::trunc);
  data.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!data) {
    throw IoError(fmt::format("cannot write trace data {}", data_path.string()));
  }

  std::ofstream out(manifest_path, std::ios::trunc);
  out << "# recorded noise predictions: seed-major, step descending, then dimension\n"
      << "dim = " << trace.dim << '\n'
      << "steps = " << trace.steps << '\n'
      << "seeds = " << trace.seeds << '\n'
      << "data = " << data_name << '\n'
      << "endian = little\n"
      << "crc32 = " << fmt::format("{:08x}", crc32_bytes(bytes)) << '\n';
  if (!out) {
    throw IoError(fmt::format("cannot write trace manifest {}", manifest_path.string()));
  }
}

Trace read_trace(const std::filesystem::path& manifest_path) {
  const TraceManifest m = read_manifest(manifest_path);
  const auto data_path = manifest_path.parent_path() / m.data;

  std::ifstream in(data_path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open trace data {}", data_path.string()));
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  Trace trace;
  trace.dim = m.dim;
  trace.steps = m.steps;
  trace.seeds = m.seeds;
  const std::size_t expected = trace.expected_size();
  if (bytes.size() != expected * 4) {
    throw IoError(fmt::format("trace data {} has {} bytes, manifest implies {}", data_path.string(),
                              bytes.size(), expected * 4));
  }
  const std::uint32_t crc = crc32_bytes(bytes);
  if (crc != m.crc32) {
    throw ChecksumMismatch(fmt::format("trace data {} checksum {:08x} != manifest {:08x}",
                                       data_path.string(), crc, m.crc32));
  }
  trace.values.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t word = 0;
    for (int b = 0; b < 4; ++b) {
      word |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
    }
    trace.values[i] = std::bit_cast<float>(word);
  }
  return trace;
}

}  // namespace ltc
