#ifndef STCHO_FFT_HPP
#define STCHO_FFT_HPP

// Thin RAII layer over FFTW's complex 3D transforms. Transforms are
// unnormalized in both directions, as in FFTW.

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>

#include "stcho/error.hpp"

namespace stcho {

static_assert(sizeof(std::complex<double>) == sizeof(fftw_complex));

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwBufferDeleter {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

// The FFTW planner is not reentrant; plan creation is serialized here while
// execution through the new-array interface may run on any thread.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Forward and inverse plans for one (depth, height, width) shape.
class Fft3d {
public:
  Fft3d(std::size_t width, std::size_t height, std::size_t depth)
      : width_(width), height_(height), depth_(depth) {
    if (width == 0 || height == 0 || depth == 0) throw InputError("Fft3d: empty shape");
    const std::size_t n = width * height * depth;
    std::unique_ptr<fftw_complex, detail::FftwBufferDeleter> scratch(fftw_alloc_complex(n));
    std::lock_guard lock(detail::planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_.reset(fftw_plan_dft_3d(static_cast<int>(depth), static_cast<int>(height),
                                    static_cast<int>(width), scratch.get(), scratch.get(),
                                    FFTW_FORWARD, flags));
    inverse_.reset(fftw_plan_dft_3d(static_cast<int>(depth), static_cast<int>(height),
                                    static_cast<int>(width), scratch.get(), scratch.get(),
                                    FFTW_BACKWARD, flags));
    if (!forward_ || !inverse_) throw NumericalError("Fft3d: FFTW planning failed");
  }

  std::size_t size() const noexcept { return width_ * height_ * depth_; }

  void forward(std::span<std::complex<double>> data) const { run(forward_.get(), data); }
  void inverse(std::span<std::complex<double>> data) const { run(inverse_.get(), data); }

  /// Shared plan pair for a shape; created on first use and immutable after.
  static const Fft3d& cached(std::size_t width, std::size_t height, std::size_t depth) {
    static std::mutex cache_mutex;
    static std::map<std::array<std::size_t, 3>, std::unique_ptr<Fft3d>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{width, height, depth}];
    if (!slot) slot = std::make_unique<Fft3d>(width, height, depth);
    return *slot;
  }

private:
  void run(fftw_plan plan, std::span<std::complex<double>> data) const {
    if (data.size() != size()) throw InputError("Fft3d: buffer size does not match plan shape");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  std::size_t width_;
  std::size_t height_;
  std::size_t depth_;
  detail::PlanPtr forward_;
  detail::PlanPtr inverse_;
};

}  // namespace stcho

#endif  // STCHO_FFT_HPP
