#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mpirelax/error.hpp"

namespace mpirelax {

/// Axis-aligned box [x_min, x_max] x [y_min, y_max] in meters.
struct Fov {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  bool operator==(const Fov&) const = default;
};

/// Shape and placement of a cell-centered Nx x Ny grid over a FOV.
struct GridGeometry {
  std::size_t nx = 2;
  std::size_t ny = 2;
  Fov fov;

  GridGeometry() = default;
  GridGeometry(std::size_t nx_, std::size_t ny_, Fov fov_) : nx(nx_), ny(ny_), fov(fov_) {
    if (nx < 2 || ny < 2) throw ConfigError("grid must be at least 2x2");
    if (!(fov.width() > 0.0) || !(fov.height() > 0.0)) throw ConfigError("grid FOV must have positive extent");
  }

  double hx() const { return fov.width() / static_cast<double>(nx); }
  double hy() const { return fov.height() / static_cast<double>(ny); }
  double center_x(std::size_t i) const { return fov.x_min + (static_cast<double>(i) + 0.5) * hx(); }
  double center_y(std::size_t j) const { return fov.y_min + (static_cast<double>(j) + 0.5) * hy(); }
  std::size_t size() const { return nx * ny; }
  /// Flat index; y is the fastest-running axis.
  std::size_t index(std::size_t i, std::size_t j) const { return i * ny + j; }

  bool operator==(const GridGeometry&) const = default;
};

inline void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string("grid metadata mismatch in ") + what);
}

/// Real-valued grid function (concentrations, traces, denoiser inputs).
class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(GridGeometry geometry, double fill = 0.0)
      : geometry_(geometry), values_(geometry.size(), fill) {}
  ScalarGrid(GridGeometry geometry, std::vector<double> values) : geometry_(geometry), values_(std::move(values)) {
    if (values_.size() != geometry_.size()) throw ConfigError("ScalarGrid value count does not match geometry");
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t nx() const { return geometry_.nx; }
  std::size_t ny() const { return geometry_.ny; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[geometry_.index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[geometry_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// n x n matrix-valued grid function. Component (a, b) is stored as one contiguous grid.
class MatrixFieldGrid {
 public:
  MatrixFieldGrid() = default;
  MatrixFieldGrid(GridGeometry geometry, std::size_t n, double fill = 0.0)
      : geometry_(geometry), n_(n), values_(n * n * geometry.size(), fill) {
    if (n == 0) throw ConfigError("MatrixFieldGrid needs n >= 1");
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t n() const { return n_; }
  std::size_t component_count() const { return n_ * n_; }

  std::span<double> component(std::size_t a, std::size_t b) {
    return std::span<double>(values_).subspan((a * n_ + b) * geometry_.size(), geometry_.size());
  }
  std::span<const double> component(std::size_t a, std::size_t b) const {
    return std::span<const double>(values_).subspan((a * n_ + b) * geometry_.size(), geometry_.size());
  }
  ScalarGrid component_grid(std::size_t a, std::size_t b) const {
    auto c = component(a, b);
    return ScalarGrid(geometry_, std::vector<double>(c.begin(), c.end()));
  }

  double& at(std::size_t a, std::size_t b, std::size_t i, std::size_t j) {
    return values_[(a * n_ + b) * geometry_.size() + geometry_.index(i, j)];
  }
  double at(std::size_t a, std::size_t b, std::size_t i, std::size_t j) const {
    return values_[(a * n_ + b) * geometry_.size() + geometry_.index(i, j)];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  GridGeometry geometry_;
  std::size_t n_ = 2;
  std::vector<double> values_;
};

/// Pointwise trace of a matrix field.
inline ScalarGrid trace_of(const MatrixFieldGrid& field) {
  ScalarGrid out(field.geometry());
  for (std::size_t a = 0; a < field.n(); ++a) {
    auto c = field.component(a, a);
    for (std::size_t k = 0; k < c.size(); ++k) out.data()[k] += c[k];
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace mpirelax
