#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "core/error.hpp"
#include "core/grid.hpp"

namespace d2turb::testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("d2turb_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Smooth RGB test pattern in [0.1, 0.9].
inline Image smooth_image(std::size_t h, std::size_t w, double phase = 0.0) {
  Image img(h, w, 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x);
      const double fy = static_cast<double>(y);
      img(y, x, 0) = static_cast<float>(0.5 + 0.3 * std::sin(fx / 9.0 + phase) * std::cos(fy / 13.0));
      img(y, x, 1) = static_cast<float>(0.5 + 0.25 * std::cos((fx + fy) / 17.0 + 2.0 * phase));
      img(y, x, 2) = static_cast<float>(0.45 + 0.2 * std::sin(fy / 11.0 - phase));
    }
  }
  return img;
}

template <typename Fn>
ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

template <typename Fn>
std::string error_message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace d2turb::testing
