#pragma once

#include <fftw3.h>

#include <complex>
#include <cstdlib>
#include <mutex>
#include <new>
#include <vector>

#include "atomplane/errors.hpp"
#include "atomplane/parallel.hpp"

namespace atomplane {

// Allocator giving FFTW-grade (64-byte) alignment so row slices stay aligned.
template <typename T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }
  bool operator==(const FftwAllocator&) const { return true; }
  bool operator!=(const FftwAllocator&) const { return false; }
};

using ComplexVec = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Deterministic 2D complex FFT: per-row 1D FFTW plans (FFTW_ESTIMATE, fixed
// algorithm choice) executed over explicit row chunks, with blocked
// transposes for the column pass. Results are bit-identical for any thread
// count. Dimensions must be multiples of 4 so every row keeps the planning
// alignment.
class Fft2d {
 public:
  Fft2d(int nx, int ny) : nx_(nx), ny_(ny) {
    if (nx < 4 || ny < 4 || nx % 4 != 0 || ny % 4 != 0) {
      throw InvalidArgumentError("Fft2d: dimensions must be multiples of 4 and >= 4");
    }
    scratch_.resize(static_cast<std::size_t>(nx) * ny);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_complex* buf = reinterpret_cast<fftw_complex*>(scratch_.data());
    row_fwd_ = fftw_plan_dft_1d(nx_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    row_bwd_ = fftw_plan_dft_1d(nx_, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    col_fwd_ = fftw_plan_dft_1d(ny_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    col_bwd_ = fftw_plan_dft_1d(ny_, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!row_fwd_ || !row_bwd_ || !col_fwd_ || !col_bwd_) {
      throw ConfigError("Fft2d: FFTW plan creation failed");
    }
  }

  ~Fft2d() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(row_fwd_);
    fftw_destroy_plan(row_bwd_);
    fftw_destroy_plan(col_fwd_);
    fftw_destroy_plan(col_bwd_);
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }

  void forward(std::complex<double>* data, int threads = 1) { run(data, true, threads); }

  // Unnormalized inverse; callers combining forward+inverse scale by 1/(nx ny).
  void inverse(std::complex<double>* data, int threads = 1) { run(data, false, threads); }

  double normalization() const { return 1.0 / (static_cast<double>(nx_) * ny_); }

 private:
  void run(std::complex<double>* data, bool fwd, int threads) {
    rows_pass(data, nx_, ny_, fwd ? row_fwd_ : row_bwd_, threads);
    transpose(data, scratch_.data(), nx_, ny_, threads);
    rows_pass(scratch_.data(), ny_, nx_, fwd ? col_fwd_ : col_bwd_, threads);
    transpose(scratch_.data(), data, ny_, nx_, threads);
  }

  static void rows_pass(std::complex<double>* data, int rowlen, int nrows, fftw_plan plan,
                        int threads) {
    parallel_for(static_cast<std::size_t>(nrows), threads, [&](std::size_t r) {
      fftw_complex* row = reinterpret_cast<fftw_complex*>(data + r * rowlen);
      fftw_execute_dft(plan, row, row);
    });
  }

  // out[x * ny + y] = in[y * nx + x], blocked for cache locality.
  static void transpose(const std::complex<double>* in, std::complex<double>* out, int nx, int ny,
                        int threads) {
    constexpr int B = 32;
    const int yblocks = (ny + B - 1) / B;
    parallel_for(static_cast<std::size_t>(yblocks), threads, [&](std::size_t yb) {
      const int y0 = static_cast<int>(yb) * B;
      const int y1 = std::min(ny, y0 + B);
      for (int x0 = 0; x0 < nx; x0 += B) {
        const int x1 = std::min(nx, x0 + B);
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            out[static_cast<std::size_t>(x) * ny + y] = in[static_cast<std::size_t>(y) * nx + x];
          }
        }
      }
    });
  }

  int nx_, ny_;
  ComplexVec scratch_;
  fftw_plan row_fwd_, row_bwd_, col_fwd_, col_bwd_;
};

}  // namespace atomplane
