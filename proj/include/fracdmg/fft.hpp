#pragma once

// Thin RAII layer over FFTW real<->complex transforms.

#include <fftw3.h>

#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <stdexcept>

#include "fracdmg/errors.hpp"

namespace fracdmg {

namespace detail {

// The FFTW planner is not reentrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

}  // namespace detail

/// Unnormalized length-L real FFT pair. forward() maps L reals to L/2+1
/// complex bins; inverse() maps back and scales by L (FFTW convention).
/// Buffers passed in must come from make_real()/make_complex() so that they
/// share FFTW's alignment.
class RealFft {
public:
  using RealBuffer = std::unique_ptr<double[], detail::FftwFree>;
  using ComplexBuffer = std::unique_ptr<fftw_complex[], detail::FftwFree>;

  explicit RealFft(std::size_t length) : length_(length) {
    if (length < 2) throw ParameterError("FFT length must be >= 2");
    auto in = make_real();
    auto out = make_complex();
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const int n = static_cast<int>(length_);
      forward_ = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_1d(n, out.get(), in.get(), FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    }
    if (forward_ == nullptr || inverse_ == nullptr) {
      destroy();
      throw std::runtime_error("FFTW failed to create a plan");
    }
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { destroy(); }

  std::size_t length() const noexcept { return length_; }
  std::size_t bins() const noexcept { return length_ / 2 + 1; }

  RealBuffer make_real() const { return detail::fftw_array<double>(length_); }
  ComplexBuffer make_complex() const { return detail::fftw_array<fftw_complex>(bins()); }

  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }

  /// Destroys the contents of `in`.
  void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }

private:
  void destroy() noexcept {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_ != nullptr) fftw_destroy_plan(forward_);
    if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
    forward_ = inverse_ = nullptr;
  }

  std::size_t length_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace fracdmg
