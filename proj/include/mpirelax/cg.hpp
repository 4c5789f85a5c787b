#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mpirelax/error.hpp"
#include "mpirelax/grid.hpp"

namespace mpirelax {

struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator,
/// starting from the content of x. Stops when |b - Ax| <= tol |b|.
/// `on_iterate(k, x)` is invoked after every update when provided.
/// Throws NumericalError when a search direction has non-positive curvature.
template <typename Operator>
CgResult conjugate_gradient(Operator&& op, std::span<const double> b, std::span<double> x, std::size_t max_iterations,
                            double tolerance,
                            const std::function<void(std::size_t, std::span<const double>)>& on_iterate = {}) {
  const std::size_t n = b.size();
  const double b_norm = norm2(b);
  CgResult result;
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }
  std::vector<double> r(n), p(n), ap(n);
  op(std::span<const double>(x.data(), n), std::span<double>(ap));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  p = r;
  double rr = dot(r, r);
  result.relative_residual = std::sqrt(rr) / b_norm;
  if (result.relative_residual <= tolerance) {
    result.converged = true;
    return result;
  }
  for (std::size_t k = 0; k < max_iterations; ++k) {
    op(std::span<const double>(p), std::span<double>(ap));
    const double curvature = dot(p, ap);
    if (!(curvature > 0.0))
      throw NumericalError("conjugate gradient breakdown: non-positive curvature " + std::to_string(curvature));
    const double step = rr / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    const double rr_next = dot(r, r);
    result.iterations = k + 1;
    result.relative_residual = std::sqrt(rr_next) / b_norm;
    if (on_iterate) on_iterate(k + 1, std::span<const double>(x.data(), n));
    if (result.relative_residual <= tolerance) {
      result.converged = true;
      return result;
    }
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  return result;
}

}  // namespace mpirelax
