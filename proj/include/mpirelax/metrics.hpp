#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpirelax/error.hpp"
#include "mpirelax/grid.hpp"

namespace mpirelax {

/// 10 log10(peak^2 / MSE) with peak = max(ref); +infinity when MSE = 0.
inline double psnr(const ScalarGrid& x, const ScalarGrid& ref) {
  require_same_geometry(x.geometry(), ref.geometry(), "psnr");
  const double peak = *std::max_element(ref.data().begin(), ref.data().end());
  if (!(peak > 0.0)) throw DomainError("psnr needs a reference with a positive maximum");
  double mse = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double d = x.data()[q] - ref.data()[q];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

inline constexpr std::size_t kSsimWindow = 7;

/// Mean SSIM over all 7x7 windows that fit inside the grid (uniform weights,
/// population moments). The dynamic range of ref (max - min, or 1 for a flat
/// reference) sets C1 = (0.01 P)^2 and C2 = (0.03 P)^2, so the score does not
/// depend on the units of the images.
inline double ssim(const ScalarGrid& x, const ScalarGrid& ref) {
  require_same_geometry(x.geometry(), ref.geometry(), "ssim");
  if (x.nx() < 8 || x.ny() < 8) throw ConfigError("ssim needs grids of at least 8x8");
  const auto [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
  const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
  const double count = static_cast<double>(kSsimWindow * kSsimWindow);

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t i0 = 0; i0 + kSsimWindow <= x.nx(); ++i0) {
    for (std::size_t j0 = 0; j0 + kSsimWindow <= x.ny(); ++j0) {
      double mx = 0.0, my = 0.0;
      for (std::size_t i = i0; i < i0 + kSsimWindow; ++i)
        for (std::size_t j = j0; j < j0 + kSsimWindow; ++j) {
          mx += x(i, j);
          my += ref(i, j);
        }
      mx /= count;
      my /= count;
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (std::size_t i = i0; i < i0 + kSsimWindow; ++i)
        for (std::size_t j = j0; j < j0 + kSsimWindow; ++j) {
          const double dx = x(i, j) - mx, dy = ref(i, j) - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= count;
      vy /= count;
      cxy /= count;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace mpirelax
