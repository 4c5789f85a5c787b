#pragma once

// Langevin theory of the adiabatic magnetization response: the Langevin
// function, the matrix-valued MPI kernel and its trace.
//
// Field quantities are expressed in mu0-scaled units (Tesla), which is how
// drive amplitudes and gradients are usually quoted: a gradient of
// "1 T/m" means mu0 * G = 1 T/m. In these units the saturation field scale is
// exactly k_B T / (M_sat * pi/6 * d^3).

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "mpirelax/error.hpp"

namespace mpirelax {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Row-major N x N matrix.
template <std::size_t N>
using Mat = std::array<double, N * N>;

using Vec2 = Vec<2>;
using Mat2 = Mat<2>;

inline Vec2 matvec(const Mat2& m, const Vec2& v) { return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]}; }
inline double determinant(const Mat2& m) { return m[0] * m[3] - m[1] * m[2]; }
inline Mat2 inverse(const Mat2& m) {
  const double det = determinant(m);
  if (det == 0.0 || !std::isfinite(det)) throw DomainError("matrix is singular");
  return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

/// Scanner and tracer constants.
struct PhysicalParams {
  double mu0 = 4e-7 * std::numbers::pi;  // T m / A
  double boltzmann = 1.380649e-23;       // J / K
  double temperature = 293.0;            // K
  double saturation_magnetization = 4.74e5;  // J T^-1 m^-3
  double diameter = 21e-9;                   // m
  Mat2 coil_sensitivity{1.0, 0.0, 0.0, 1.0};
  /// Selection-field gradient, mu0-scaled (T/m).
  Mat2 gradient{-1.0, 0.0, 0.0, -1.0};
  /// Single-particle moment (A m^2); <= 0 means "derive from M_sat and d".
  double moment = 0.0;

  double particle_volume() const { return std::numbers::pi / 6.0 * diameter * diameter * diameter; }

  /// Saturation field scale (mu0-scaled, T); sets the kernel dilation.
  double h_sat() const { return boltzmann * temperature / (saturation_magnetization * particle_volume()); }

  double particle_moment() const { return moment > 0.0 ? moment : saturation_magnetization * particle_volume(); }

  /// Throws DomainError when a constant is non-physical or G is singular.
  void validate() const {
    if (!(temperature > 0.0) || !(saturation_magnetization > 0.0) || !(diameter > 0.0) || !(boltzmann > 0.0) ||
        !(mu0 > 0.0))
      throw DomainError("temperature, saturation magnetization, diameter, k_B and mu0 must be positive");
    if (!(h_sat() > 0.0) || !std::isfinite(h_sat())) throw DomainError("H_sat must be positive and finite");
    const double det = determinant(gradient);
    if (det == 0.0 || !std::isfinite(det)) throw DomainError("selection-field gradient must be invertible");
  }
};

namespace detail {
inline void check_nonneg(double x) {
  if (std::isnan(x) || x < 0.0) throw DomainError("Langevin argument must be finite and non-negative");
}
// Below this argument the Taylor expansions are used; direct evaluation of
// coth(x) - 1/x cancels catastrophically near zero.
inline constexpr double kSeriesThreshold = 1e-2;
}  // namespace detail

/// Langevin function coth(x) - 1/x, continuously extended by 0 at x = 0.
inline double langevin(double x) {
  detail::check_nonneg(x);
  if (x < detail::kSeriesThreshold) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0)));
  }
  if (std::isinf(x)) return 1.0;
  return 1.0 / std::tanh(x) - 1.0 / x;
}

/// L(x) / x, extended by 1/3 at x = 0.
inline double langevin_over_x(double x) {
  detail::check_nonneg(x);
  if (x < detail::kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0));
  }
  return langevin(x) / x;
}

/// L'(x) = 1/x^2 - csch^2(x), extended by 1/3 at x = 0.
inline double langevin_derivative(double x) {
  detail::check_nonneg(x);
  if (x < detail::kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 / 3.0 - x2 * (1.0 / 15.0 - x2 * (2.0 / 189.0 - x2 / 675.0));
  }
  if (x > 350.0) return 1.0 / (x * x);
  const double s = std::sinh(x);
  return 1.0 / (x * x) - 1.0 / (s * s);
}

/// Dilated MPI kernel (1/h) K(y/h) with
/// K(y) = L'(|y|) yy^T/|y|^2 + L(|y|)/|y| (I - yy^T/|y|^2), K(0) = I/3.
template <std::size_t N>
Mat<N> mpi_kernel(const Vec<N>& y, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("kernel resolution h must be positive");
  Vec<N> z{};
  double r2 = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    if (!std::isfinite(y[a])) throw DomainError("kernel argument must be finite");
    z[a] = y[a] / h;
    r2 += z[a] * z[a];
  }
  const double r = std::sqrt(r2);
  const double along = langevin_derivative(r);
  const double across = langevin_over_x(r);
  Mat<N> k{};
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      const double proj = r2 > 0.0 ? z[a] * z[b] / r2 : 0.0;
      const double id = a == b ? 1.0 : 0.0;
      // At the origin both coefficients are 1/3 and the projector drops out.
      k[a * N + b] = (along * proj + across * (id - proj)) / h;
    }
  }
  return k;
}

/// Dilated trace kernel (1/h) kappa(y/h), kappa(y) = L'(|y|) + (N-1) L(|y|)/|y|.
template <std::size_t N>
double trace_kernel(const Vec<N>& y, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("kernel resolution h must be positive");
  double r2 = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    if (!std::isfinite(y[a])) throw DomainError("kernel argument must be finite");
    r2 += (y[a] / h) * (y[a] / h);
  }
  const double r = std::sqrt(r2);
  return (langevin_derivative(r) + static_cast<double>(N - 1) * langevin_over_x(r)) / h;
}

}  // namespace mpirelax
