#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mpirelax/grid.hpp"

namespace testutil {

inline mpirelax::GridGeometry square_grid(std::size_t n, double half = 0.012) {
  return mpirelax::GridGeometry(n, n, mpirelax::Fov{-half, half, -half, half});
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline mpirelax::ScalarGrid random_grid(const mpirelax::GridGeometry& g, std::uint64_t seed) {
  return mpirelax::ScalarGrid(g, random_vector(g.size(), seed));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline std::string source_path(const std::string& rel) { return std::string(MPIRELAX_SOURCE_DIR) + "/" + rel; }

}  // namespace testutil
