#include "core/flow_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "core/error.hpp"

namespace d2turb {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

FlowFileHeader parse_header(const unsigned char* bytes, std::size_t size, const std::string& origin) {
  if (size < kFlowHeaderBytes) {
    throw Error(ErrorCode::Format, "truncated header in " + origin + ": expected " + std::to_string(kFlowHeaderBytes) +
                                       " bytes, got " + std::to_string(size));
  }
  if (std::memcmp(bytes, kFlowMagic, 4) != 0) throw Error(ErrorCode::Format, "bad magic in " + origin + ": expected D2FL");
  FlowFileHeader h;
  h.version = get_u32(bytes + 4);
  h.height = get_u32(bytes + 8);
  h.width = get_u32(bytes + 12);
  h.channels = get_u32(bytes + 16);
  if (h.version != 1) {
    throw Error(ErrorCode::Format, "unsupported version " + std::to_string(h.version) + " in " + origin);
  }
  if (h.channels != 2) {
    throw Error(ErrorCode::Format, "bad channel count " + std::to_string(h.channels) + " in " + origin);
  }
  return h;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<unsigned char> encode_flow(const Grid<float>& vectors) {
  if (vectors.channels() != 2) throw Error(ErrorCode::Shape, "flow must have 2 channels");
  for (float v : vectors.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "flow contains non-finite values");
  }
  std::vector<unsigned char> out;
  out.reserve(kFlowHeaderBytes + vectors.size() * 4);
  out.insert(out.end(), kFlowMagic, kFlowMagic + 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(vectors.height()));
  put_u32(out, static_cast<std::uint32_t>(vectors.width()));
  put_u32(out, 2);
  for (float v : vectors.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Grid<float> decode_flow(const std::vector<unsigned char>& bytes, const std::string& origin) {
  const FlowFileHeader h = parse_header(bytes.data(), bytes.size(), origin);
  const std::uint64_t expected = kFlowHeaderBytes + std::uint64_t{h.height} * h.width * 8;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::Format, std::string(bytes.size() < expected ? "truncated" : "trailing bytes in") +
                                       " payload in " + origin + ": expected " + std::to_string(expected) +
                                       " bytes, got " + std::to_string(bytes.size()));
  }
  Grid<float> out(h.height, h.width, 2);
  const unsigned char* p = bytes.data() + kFlowHeaderBytes;
  for (float& v : out.values()) {
    v = std::bit_cast<float>(get_u32(p));
    p += 4;
  }
  return out;
}

void write_flow(const std::filesystem::path& path, const Grid<float>& vectors) {
  const auto bytes = encode_flow(vectors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Grid<float> read_flow(const std::filesystem::path& path) { return decode_flow(slurp(path), path.string()); }

FlowFileHeader read_flow_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  unsigned char buf[kFlowHeaderBytes];
  in.read(reinterpret_cast<char*>(buf), kFlowHeaderBytes);
  return parse_header(buf, static_cast<std::size_t>(in.gcount()), path.string());
}

}  // namespace d2turb
