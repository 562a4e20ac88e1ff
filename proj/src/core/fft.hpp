#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace d2turb::fft {

enum class Direction { Forward, Inverse };

// Unnormalised in-place 2-D DFT over a row-major rows x cols array.
// Forward uses exp(-i...), Inverse exp(+i...). Thread-safe; results do not
// depend on buffer alignment or on which thread executes the transform.
void transform_2d(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols, Direction dir);

// Signed frequency index of bin k in an n-point transform: 0,1,..,n/2-1,-n/2,..,-1.
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace d2turb::fft
