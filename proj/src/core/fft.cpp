#include "core/fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "core/error.hpp"

namespace d2turb::fft {

namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, int>;

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per shape and kept for the process.
class PlanCache {
 public:
  fftw_plan get(std::size_t rows, std::size_t cols, Direction dir) {
    const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    std::lock_guard lock(mutex_);
    const PlanKey key{rows, cols, sign};
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rows * cols));
    if (scratch == nullptr) throw Error(ErrorCode::Internal, "fftw_malloc failed");
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), scratch, scratch, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorCode::Internal, "FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform_2d(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols, Direction dir) {
  if (data.size() != rows * cols || rows == 0 || cols == 0) {
    throw Error(ErrorCode::Shape, "FFT buffer size does not match rows x cols");
  }
  fftw_plan plan = cache().get(rows, cols, dir);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace d2turb::fft
