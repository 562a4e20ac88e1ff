#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/grid.hpp"

namespace d2turb {

inline constexpr char kFlowMagic[4] = {'D', '2', 'F', 'L'};
inline constexpr std::size_t kFlowHeaderBytes = 20;

struct FlowFileHeader {
  std::uint32_t version = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 2;
};

// Header followed by row-major, pixel-interleaved (dx, dy) little-endian
// float32. `vectors` must be H x W x 2 and finite.
std::vector<unsigned char> encode_flow(const Grid<float>& vectors);
Grid<float> decode_flow(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>");

// Throws ErrorCode::Io on unwritable paths.
void write_flow(const std::filesystem::path& path, const Grid<float>& vectors);

// Throws ErrorCode::Format with messages prefixed "bad magic",
// "unsupported version", "bad channel count" or "truncated".
Grid<float> read_flow(const std::filesystem::path& path);
FlowFileHeader read_flow_header(const std::filesystem::path& path);

}  // namespace d2turb
