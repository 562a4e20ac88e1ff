#include "core/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "core/error.hpp"
#include "core/log.hpp"

namespace d2turb {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp msg) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  if (buffer != nullptr) *buffer = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

const char* color_type_name(int type) {
  switch (type) {
    case PNG_COLOR_TYPE_GRAY: return "gray";
    case PNG_COLOR_TYPE_RGB: return "rgb";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "rgba";
  }
  return "unknown";
}

}  // namespace

unsigned quantize(float value, unsigned max_code) {
  const double v = std::isnan(value) ? 0.0 : std::clamp(static_cast<double>(value), 0.0, 1.0);
  return static_cast<unsigned>(std::round(v * max_code));
}

DecodedImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::Io, "cannot open " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::Format, "not a PNG file: " + path.string());
  }

  std::string png_error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &png_error, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(ErrorCode::Internal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::Internal, "png_create_info_struct failed");
  }

  DecodedImage out;
  std::string reject;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Format, "corrupt PNG " + path.string() + ": " + png_error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    reject = std::string("unsupported color type ") + color_type_name(color_type);
  } else if (bit_depth != 8 && bit_depth != 16) {
    reject = "unsupported bit depth " + std::to_string(bit_depth);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) reject = "unsupported transparency chunk";
  if (!reject.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Format, reject + " in " + path.string());
  }
  if (bit_depth == 16) png_set_swap(png);  // host little-endian rows below
  png_read_update_info(png, info);

  const std::size_t channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.bit_depth = depth;
  out.pixels = Image(height, width, channels);
  auto dst = out.pixels.values();
  if (depth == 8) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(raw[i] / 255.0);
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const unsigned v = raw[2 * i] | static_cast<unsigned>(raw[2 * i + 1]) << 8;
      dst[i] = static_cast<float>(v / 65535.0);
    }
  }
  return out;
}

Image read_rgb_image(const std::filesystem::path& path) {
  DecodedImage d = read_png(path);
  if (d.pixels.channels() == 3) return std::move(d.pixels);
  Image rgb(d.pixels.height(), d.pixels.width(), 3);
  for (std::size_t p = 0; p < d.pixels.pixel_count(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) rgb.data()[3 * p + c] = d.pixels.data()[p];
  }
  return rgb;
}

Image read_gray_image(const std::filesystem::path& path) {
  DecodedImage d = read_png(path);
  if (d.pixels.channels() != 1) {
    throw Error(ErrorCode::Format, "expected a grayscale PNG, got " + std::to_string(d.pixels.channels()) +
                                       " channels: " + path.string());
  }
  return std::move(d.pixels);
}

std::size_t write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::Shape, "PNG output needs 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::Format, "unsupported bit depth " + std::to_string(bit_depth));
  if (image.empty()) throw Error(ErrorCode::Shape, "cannot write an empty image");

  const unsigned max_code = bit_depth == 8 ? 255u : 65535u;
  const std::size_t bytes_per_sample = bit_depth / 8;
  const std::size_t rowbytes = image.width() * image.channels() * bytes_per_sample;
  std::vector<unsigned char> raw(rowbytes * image.height());
  std::size_t clamped = 0;
  auto src = image.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] >= 0.0f && src[i] <= 1.0f)) ++clamped;
    const unsigned q = quantize(src[i], max_code);
    if (bit_depth == 8) {
      raw[i] = static_cast<unsigned char>(q);
    } else {
      raw[2 * i] = static_cast<unsigned char>(q >> 8);  // PNG is big-endian
      raw[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
  }
  if (clamped > 0) logger().warn("{}: clamped {} values outside [0,1]", path.string(), clamped);

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
  std::string png_error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &png_error, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(ErrorCode::Internal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::Internal, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(image.height());
  for (std::size_t y = 0; y < image.height(); ++y) rows[y] = raw.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG write failed for " + path.string() + ": " + png_error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), bit_depth,
               image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0 || std::ferror(file.get())) throw Error(ErrorCode::Io, "write failed: " + path.string());
  return clamped;
}

}  // namespace d2turb
