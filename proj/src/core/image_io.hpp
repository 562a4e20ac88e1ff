#pragma once

#include <filesystem>

#include "core/grid.hpp"

namespace d2turb {

struct DecodedImage {
  Image pixels;       // channels 1 (gray) or 3 (RGB), normalised by the bit-depth max
  int bit_depth = 8;  // 8 or 16
};

// Reads 8/16-bit gray, RGB and palette PNGs (palette expands to RGB; alpha
// channels are rejected). Throws ErrorCode::Format naming the unsupported bit
// depth or color type, ErrorCode::Io if unreadable.
DecodedImage read_png(const std::filesystem::path& path);

// 3-channel input, gray replicated to RGB.
Image read_rgb_image(const std::filesystem::path& path);
// Single-channel input only.
Image read_gray_image(const std::filesystem::path& path);

// Quantises round(v * max), half away from zero, after clamping to [0,1].
// Writes gray for 1 channel, RGB for 3. Returns the number of clamped values.
std::size_t write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

// Code for a [0,1] value at the given max code (255 or 65535).
unsigned quantize(float value, unsigned max_code);

}  // namespace d2turb
