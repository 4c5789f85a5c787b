#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "mpirelax/grid.hpp"
#include "mpirelax/physics.hpp"

namespace mpirelax {

/// Four cell indices and tensor-product weights of a cosine interpolation.
struct InterpolationStencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
  bool outside_fov = false;
};

namespace detail {
// Bracketing cells and cosine weight along one axis; points beyond the outer
// cell centers take the boundary value.
inline void cosine_axis(double coord, double lo, double h, std::size_t n, std::size_t& i0, double& w) {
  const double u = (coord - lo) / h - 0.5;
  if (u <= 0.0) {
    i0 = 0;
    w = 0.0;
    return;
  }
  if (u >= static_cast<double>(n - 1)) {
    i0 = n - 2;
    w = 1.0;
    return;
  }
  const double base = std::floor(u);
  i0 = static_cast<std::size_t>(base);
  const double frac = u - base;
  w = 0.5 * (1.0 - std::cos(std::numbers::pi * frac));
}
}  // namespace detail

/// Separable cosine interpolation: per axis the blending weight of the upper
/// neighbour is (1 - cos(pi u)) / 2 with u the local coordinate in [0, 1].
inline InterpolationStencil cosine_stencil(const GridGeometry& g, double x, double y) {
  InterpolationStencil s;
  s.outside_fov = !g.fov.contains(x, y);
  std::size_t i0, j0;
  double wx, wy;
  detail::cosine_axis(x, g.fov.x_min, g.hx(), g.nx, i0, wx);
  detail::cosine_axis(y, g.fov.y_min, g.hy(), g.ny, j0, wy);
  s.index = {g.index(i0, j0), g.index(i0 + 1, j0), g.index(i0, j0 + 1), g.index(i0 + 1, j0 + 1)};
  s.weight = {(1.0 - wx) * (1.0 - wy), wx * (1.0 - wy), (1.0 - wx) * wy, wx * wy};
  return s;
}

/// Cosine-interpolated value of a 2x2 matrix field at x. Points outside the
/// FOV are clamped to the boundary and counted in *outside_count.
inline Mat2 interpolate_matrix_field(const MatrixFieldGrid& field, const Vec2& x, std::size_t* outside_count = nullptr) {
  const auto s = cosine_stencil(field.geometry(), x[0], x[1]);
  if (s.outside_fov && outside_count != nullptr) ++*outside_count;
  Mat2 out{};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      auto c = field.component(a, b);
      double v = 0.0;
      for (std::size_t q = 0; q < 4; ++q) v += s.weight[q] * c[s.index[q]];
      out[a * 2 + b] = v;
    }
  return out;
}

}  // namespace mpirelax
