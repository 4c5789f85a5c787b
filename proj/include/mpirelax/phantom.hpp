#pragma once

// Shape-primitive phantoms and their antialiased rasterization.
//
// Text format, one primitive per line, coordinates in meters, '#' comments:
//   disc <cx> <cy> <radius> <intensity>
//   rect <x0> <y0> <x1> <y1> <intensity>
//   tube <width> <intensity> <x1> <y1> <x2> <y2> [<x3> <y3> ...]

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mpirelax/error.hpp"
#include "mpirelax/grid.hpp"
#include "mpirelax/physics.hpp"

namespace mpirelax {

struct Disc {
  Vec2 center;
  double radius;
  double intensity;
};

struct Rect {
  Vec2 lower;
  Vec2 upper;
  double intensity;
};

/// Polyline with a round-capped stroke of the given width.
struct Tube {
  std::vector<Vec2> points;
  double width;
  double intensity;
};

using Primitive = std::variant<Disc, Rect, Tube>;

struct Phantom {
  std::string name;
  std::vector<Primitive> primitives;
};

namespace detail {

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

inline bool covers(const Primitive& prim, const Vec2& p) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return std::hypot(p[0] - s.center[0], p[1] - s.center[1]) <= s.radius;
        } else if constexpr (std::is_same_v<T, Rect>) {
          return p[0] >= s.lower[0] && p[0] <= s.upper[0] && p[1] >= s.lower[1] && p[1] <= s.upper[1];
        } else {
          if (s.points.size() == 1) return std::hypot(p[0] - s.points[0][0], p[1] - s.points[0][1]) <= 0.5 * s.width;
          for (std::size_t k = 0; k + 1 < s.points.size(); ++k)
            if (segment_distance(p, s.points[k], s.points[k + 1]) <= 0.5 * s.width) return true;
          return false;
        }
      },
      prim);
}

inline double intensity_of(const Primitive& prim) {
  return std::visit([](const auto& s) { return s.intensity; }, prim);
}

inline Fov bounds_of(const Primitive& prim) {
  return std::visit(
      [](const auto& s) -> Fov {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return {s.center[0] - s.radius, s.center[0] + s.radius, s.center[1] - s.radius, s.center[1] + s.radius};
        } else if constexpr (std::is_same_v<T, Rect>) {
          return {s.lower[0], s.upper[0], s.lower[1], s.upper[1]};
        } else {
          Fov b{1e300, -1e300, 1e300, -1e300};
          for (const auto& q : s.points) {
            b.x_min = std::min(b.x_min, q[0] - 0.5 * s.width);
            b.x_max = std::max(b.x_max, q[0] + 0.5 * s.width);
            b.y_min = std::min(b.y_min, q[1] - 0.5 * s.width);
            b.y_max = std::max(b.y_max, q[1] + 0.5 * s.width);
          }
          return b;
        }
      },
      prim);
}

}  // namespace detail

struct RasterResult {
  ScalarGrid grid;
  /// Primitives that extend beyond the FOV and were clipped.
  std::size_t clipped = 0;
};

/// Antialiased coverage rasterization: each cell takes the mean over a
/// supersampling lattice of the largest covering primitive intensity.
inline RasterResult rasterize_phantom(const Phantom& phantom, const GridGeometry& geometry, std::size_t supersample = 8) {
  RasterResult result{ScalarGrid(geometry), 0};
  for (const auto& prim : phantom.primitives) {
    if (detail::intensity_of(prim) < 0.0) throw DomainError("phantom intensities must be non-negative");
    const Fov b = detail::bounds_of(prim);
    const Fov& f = geometry.fov;
    if (b.x_min < f.x_min || b.x_max > f.x_max || b.y_min < f.y_min || b.y_max > f.y_max) ++result.clipped;
  }
  const double sx = geometry.hx() / static_cast<double>(supersample);
  const double sy = geometry.hy() / static_cast<double>(supersample);
  const double inv = 1.0 / static_cast<double>(supersample * supersample);
  for (std::size_t i = 0; i < geometry.nx; ++i) {
    for (std::size_t j = 0; j < geometry.ny; ++j) {
      const double x0 = geometry.fov.x_min + static_cast<double>(i) * geometry.hx();
      const double y0 = geometry.fov.y_min + static_cast<double>(j) * geometry.hy();
      double acc = 0.0;
      for (std::size_t a = 0; a < supersample; ++a) {
        for (std::size_t c = 0; c < supersample; ++c) {
          const Vec2 p{x0 + (static_cast<double>(a) + 0.5) * sx, y0 + (static_cast<double>(c) + 0.5) * sy};
          double v = 0.0;
          for (const auto& prim : phantom.primitives)
            if (detail::covers(prim, p)) v = std::max(v, detail::intensity_of(prim));
          acc += v;
        }
      }
      result.grid(i, j) = acc * inv;
    }
  }
  return result;
}

inline Phantom parse_phantom(std::istream& in, std::string name = {}) {
  Phantom phantom;
  phantom.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw ConfigError("phantom line " + std::to_string(lineno) + ": malformed number");
    auto need = [&](bool ok) {
      if (!ok) throw ConfigError("phantom line " + std::to_string(lineno) + ": wrong number of values for " + kind);
    };
    if (kind == "disc") {
      need(v.size() == 4);
      phantom.primitives.push_back(Disc{{v[0], v[1]}, v[2], v[3]});
    } else if (kind == "rect") {
      need(v.size() == 5);
      phantom.primitives.push_back(
          Rect{{std::min(v[0], v[2]), std::min(v[1], v[3])}, {std::max(v[0], v[2]), std::max(v[1], v[3])}, v[4]});
    } else if (kind == "tube") {
      need(v.size() >= 4 && v.size() % 2 == 0);
      Tube t{{}, v[0], v[1]};
      for (std::size_t k = 2; k < v.size(); k += 2) t.points.push_back({v[k], v[k + 1]});
      phantom.primitives.push_back(std::move(t));
    } else {
      throw ConfigError("phantom line " + std::to_string(lineno) + ": unknown primitive '" + kind + "'");
    }
  }
  return phantom;
}

inline Phantom load_phantom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open phantom file " + path);
  auto stem = path.substr(path.find_last_of('/') + 1);
  if (auto dot = stem.find('.'); dot != std::string::npos) stem.erase(dot);
  return parse_phantom(in, stem);
}

}  // namespace mpirelax
