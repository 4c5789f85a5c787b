#pragma once

// Thin RAII wrappers over FFTW: an orthonormal 2D DCT-II and a zero-padded
// real FFT used for exact linear convolution on grids.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "mpirelax/error.hpp"

namespace mpirelax::detail {

/// The FFTW planner is not reentrant; every plan creation and destruction goes through this lock.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct PlanDeleter {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

/// Orthonormal separable DCT-II on an nx x ny array (y fastest) and its inverse.
class Dct2d {
 public:
  Dct2d(std::size_t nx, std::size_t ny)
      : nx_(nx), ny_(ny), buffer_(fftw_buffer<double>(nx * ny)), scale_x_(nx), scale_y_(ny), inv_x_(nx), inv_y_(ny) {
    std::lock_guard lock(fftw_planner_mutex());
    const int n0 = static_cast<int>(nx), n1 = static_cast<int>(ny);
    forward_.reset(fftw_plan_r2r_2d(n0, n1, buffer_.get(), buffer_.get(), FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_r2r_2d(n0, n1, buffer_.get(), buffer_.get(), FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE));
    if (!forward_ || !inverse_) throw NumericalError("FFTW failed to create DCT plans");
    // FFTW's REDFT10 is 2 * sum x_j cos(pi (j + 1/2) k / N); orthonormal scaling per axis.
    for (std::size_t k = 0; k < nx; ++k) scale_x_[k] = k == 0 ? std::sqrt(1.0 / (4.0 * nx)) : std::sqrt(1.0 / (2.0 * nx));
    for (std::size_t k = 0; k < ny; ++k) scale_y_[k] = k == 0 ? std::sqrt(1.0 / (4.0 * ny)) : std::sqrt(1.0 / (2.0 * ny));
    inv_x_ = scale_x_;
    inv_y_ = scale_y_;
    inv_x_[0] *= 2.0;
    inv_y_[0] *= 2.0;
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

  void forward(std::span<const double> in, std::span<double> out) const {
    std::copy(in.begin(), in.end(), buffer_.get());
    fftw_execute(forward_.get());
    for (std::size_t i = 0; i < nx_; ++i)
      for (std::size_t j = 0; j < ny_; ++j) out[i * ny_ + j] = buffer_[i * ny_ + j] * scale_x_[i] * scale_y_[j];
  }

  void inverse(std::span<const double> in, std::span<double> out) const {
    // REDFT01 computes Y_0 + 2 sum_{k>0} Y_k cos(...).
    for (std::size_t i = 0; i < nx_; ++i)
      for (std::size_t j = 0; j < ny_; ++j) buffer_[i * ny_ + j] = in[i * ny_ + j] * inv_x_[i] * inv_y_[j];
    fftw_execute(inverse_.get());
    std::copy(buffer_.get(), buffer_.get() + nx_ * ny_, out.begin());
  }

 private:
  std::size_t nx_, ny_;
  std::unique_ptr<double[], FftwFree> buffer_;
  std::vector<double> scale_x_, scale_y_, inv_x_, inv_y_;
  Plan forward_, inverse_;
};

/// Real 2D FFT of size mx x my (y fastest) with a half-complex spectrum.
class RealFft2d {
 public:
  RealFft2d(std::size_t mx, std::size_t my)
      : mx_(mx), my_(my), spectral_y_(my / 2 + 1),
        real_(fftw_buffer<double>(mx * my)),
        spectrum_(fftw_buffer<fftw_complex>(mx * spectral_y_)) {
    std::lock_guard lock(fftw_planner_mutex());
    const int n0 = static_cast<int>(mx), n1 = static_cast<int>(my);
    forward_.reset(fftw_plan_dft_r2c_2d(n0, n1, real_.get(), spectrum_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_2d(n0, n1, spectrum_.get(), real_.get(), FFTW_ESTIMATE));
    if (!forward_ || !inverse_) throw NumericalError("FFTW failed to create FFT plans");
  }

  std::size_t mx() const { return mx_; }
  std::size_t my() const { return my_; }
  std::size_t spectrum_size() const { return mx_ * spectral_y_; }

  /// Forward transform of a real mx x my array.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(forward_.get());
    const auto* s = reinterpret_cast<const std::complex<double>*>(spectrum_.get());
    std::copy(s, s + spectrum_size(), out.begin());
  }

  /// Unnormalized inverse transform (result is scaled by mx * my).
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    auto* s = reinterpret_cast<std::complex<double>*>(spectrum_.get());
    std::copy(in.begin(), in.end(), s);
    fftw_execute(inverse_.get());
    std::copy(real_.get(), real_.get() + mx_ * my_, out.begin());
  }

 private:
  std::size_t mx_, my_, spectral_y_;
  std::unique_ptr<double[], FftwFree> real_;
  std::unique_ptr<fftw_complex[], FftwFree> spectrum_;
  Plan forward_, inverse_;
};

/// Complex 1D DFT of length n: forward is sum x_j e^{-2 pi i jk/n}, inverse is unnormalized.
class ComplexFft1d {
 public:
  explicit ComplexFft1d(std::size_t n) : n_(n), buffer_(fftw_buffer<fftw_complex>(n)) {
    std::lock_guard lock(fftw_planner_mutex());
    forward_.reset(fftw_plan_dft_1d(static_cast<int>(n), buffer_.get(), buffer_.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_1d(static_cast<int>(n), buffer_.get(), buffer_.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
    if (!forward_ || !inverse_) throw NumericalError("FFTW failed to create DFT plans");
  }

  std::size_t size() const { return n_; }

  void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    run(forward_.get(), in, out);
  }
  void inverse(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    run(inverse_.get(), in, out);
  }

 private:
  void run(fftw_plan plan, std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    auto* b = reinterpret_cast<std::complex<double>*>(buffer_.get());
    std::copy(in.begin(), in.end(), b);
    fftw_execute(plan);
    std::copy(b, b + n_, out.begin());
  }

  std::size_t n_;
  std::unique_ptr<fftw_complex[], FftwFree> buffer_;
  Plan forward_, inverse_;
};

}  // namespace mpirelax::detail
