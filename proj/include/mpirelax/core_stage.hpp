#pragma once

// MPI core stage: reconstruct the 2x2 core response A on a grid from
// relaxation-free samples (s_ad,k, r_k, v_k) by minimizing
//
//   F[A] + gamma R[A],  F[A] = 1/L sum_k |s_k - I[A](r_k) v_k|^2,
//   R[A] = sum_ab |Bi-Laplacian(A^ab)|^2,
//
// with I the cosine interpolation. Velocities enter in normalized units
// (reconstruction-FOV widths per sample step in field coordinates) and the
// signal is rescaled to match, so A keeps the units of the forward model
// while gamma is independent of the physical time and length scales.
// The unknowns are the orthonormal DCT
// coefficients of the four component grids; in that basis the Neumann
// Bi-Laplacian is diagonal, so only the data term is applied in space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "mpirelax/cg.hpp"
#include "mpirelax/fft.hpp"
#include "mpirelax/interpolation.hpp"
#include "mpirelax/scan.hpp"

namespace mpirelax {

/// 5-point Laplacian with reflective (Neumann) boundaries, in pixel units.
inline ScalarGrid laplacian_apply(const ScalarGrid& g) {
  const std::size_t nx = g.nx(), ny = g.ny();
  ScalarGrid out(g.geometry());
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double c = g(i, j);
      const double l = i > 0 ? g(i - 1, j) : c;
      const double r = i + 1 < nx ? g(i + 1, j) : c;
      const double d = j > 0 ? g(i, j - 1) : c;
      const double u = j + 1 < ny ? g(i, j + 1) : c;
      out(i, j) = l + r + d + u - 4.0 * c;
    }
  }
  return out;
}

/// Laplacian applied twice (pixel units, reflective boundaries).
inline ScalarGrid bilaplacian_apply(const ScalarGrid& g) {
  if (g.nx() < 5 || g.ny() < 5) throw ConfigError("Bi-Laplacian needs a grid of at least 5x5");
  return laplacian_apply(laplacian_apply(g));
}

/// Eigenvalue magnitudes of the Neumann Laplacian on the DCT-II basis:
/// 4 sin^2(pi p / 2nx) + 4 sin^2(pi q / 2ny).
inline std::vector<double> laplacian_eigenvalues(std::size_t nx, std::size_t ny) {
  std::vector<double> ev(nx * ny);
  for (std::size_t p = 0; p < nx; ++p) {
    const double sp = std::sin(std::numbers::pi * static_cast<double>(p) / (2.0 * static_cast<double>(nx)));
    for (std::size_t q = 0; q < ny; ++q) {
      const double sq = std::sin(std::numbers::pi * static_cast<double>(q) / (2.0 * static_cast<double>(ny)));
      ev[p * ny + q] = 4.0 * sp * sp + 4.0 * sq * sq;
    }
  }
  return ev;
}

/// Field-velocity unit of the core stage: sqrt|det G| * max(FOV width, height) / dt.
inline double velocity_unit(double dt, const PhysicalParams& params, const GridGeometry& geometry) {
  if (!(dt > 0.0)) throw ConfigError("velocity unit needs dt > 0");
  return std::sqrt(std::abs(determinant(params.gradient))) * std::max(geometry.fov.width(), geometry.fov.height()) / dt;
}

struct CoreStageConfig {
  double gamma = 7e-7;
  /// Regularizer order; only the Bi-Laplacian (2) is supported.
  int regularizer_order = 2;
  std::size_t cg_max_iterations = 15000;
  double cg_tolerance = 1e-6;
  GridGeometry geometry;

  void validate() const {
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
    if (regularizer_order != 2) throw ConfigError("only regularizer order 2 (Bi-Laplacian) is supported");
    if (!(cg_tolerance > 0.0 && cg_tolerance < 1.0)) throw ConfigError("CG tolerance must lie in (0, 1)");
    if (cg_max_iterations < 1) throw ConfigError("CG needs at least one iteration");
  }
};

struct CoreSolveReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  double energy = 0.0;
  double data_fidelity = 0.0;
  /// Trajectory samples outside the FOV (clamped to the boundary).
  std::size_t outside_samples = 0;
};

struct CoreStageResult {
  MatrixFieldGrid field;
  CoreSolveReport report;
};

/// The discretized core-stage least-squares problem. Vectors in "field space"
/// hold the four component grids back to back (component c = 2a + b);
/// "coefficient space" holds their orthonormal DCTs in the same layout.
class CoreStageProblem {
 public:
  CoreStageProblem(const ScanRecord& scan, const PhysicalParams& params, const GridGeometry& geometry, double gamma)
      : geometry_(geometry), gamma_(gamma), dct_(geometry.nx, geometry.ny) {
    scan.validate();
    if (!(scan.calibration != 0.0) || !std::isfinite(scan.calibration))
      throw ConfigError("scan calibration scalar must be finite and non-zero");
    const double v_unit = velocity_unit(scan.dt, params, geometry);
    const std::size_t L = scan.size();
    data_.resize(2 * L);
    vel_.resize(L);
    stencils_.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
      data_[2 * k] = scan.samples[k][0] / (scan.calibration * v_unit);
      data_[2 * k + 1] = scan.samples[k][1] / (scan.calibration * v_unit);
      const Vec2 gv = matvec(params.gradient, scan.velocities[k]);
      vel_[k] = {gv[0] / v_unit, gv[1] / v_unit};
      stencils_.push_back(cosine_stencil(geometry, scan.positions[k][0], scan.positions[k][1]));
      if (stencils_.back().outside_fov) ++outside_;
    }
    const auto ev = laplacian_eigenvalues(geometry.nx, geometry.ny);
    penalty_.resize(ev.size());
    for (std::size_t q = 0; q < ev.size(); ++q) penalty_[q] = ev[q] * ev[q] * ev[q] * ev[q];
    scratch_field_.resize(unknowns());
    scratch_data_.resize(2 * L);
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t unknowns() const { return 4 * geometry_.size(); }
  std::size_t sample_count() const { return vel_.size(); }
  std::size_t outside_samples() const { return outside_; }
  std::span<const double> data() const { return data_; }

  /// y_k = I[A](r_k) v_k for a field-space vector A.
  void forward(std::span<const double> field, std::span<double> y) const {
    const std::size_t n = geometry_.size();
    for (std::size_t k = 0; k < vel_.size(); ++k) {
      const auto& s = stencils_[k];
      double a[4];
      for (std::size_t c = 0; c < 4; ++c) {
        const double* comp = field.data() + c * n;
        a[c] = s.weight[0] * comp[s.index[0]] + s.weight[1] * comp[s.index[1]] + s.weight[2] * comp[s.index[2]] +
               s.weight[3] * comp[s.index[3]];
      }
      y[2 * k] = a[0] * vel_[k][0] + a[1] * vel_[k][1];
      y[2 * k + 1] = a[2] * vel_[k][0] + a[3] * vel_[k][1];
    }
  }

  /// Transpose of forward().
  void adjoint(std::span<const double> y, std::span<double> field) const {
    const std::size_t n = geometry_.size();
    std::fill(field.begin(), field.end(), 0.0);
    for (std::size_t k = 0; k < vel_.size(); ++k) {
      const auto& s = stencils_[k];
      const double coeff[4] = {y[2 * k] * vel_[k][0], y[2 * k] * vel_[k][1], y[2 * k + 1] * vel_[k][0],
                               y[2 * k + 1] * vel_[k][1]};
      for (std::size_t c = 0; c < 4; ++c) {
        double* comp = field.data() + c * n;
        for (std::size_t q = 0; q < 4; ++q) comp[s.index[q]] += s.weight[q] * coeff[c];
      }
    }
  }

  void to_field(std::span<const double> coeffs, std::span<double> field) const {
    const std::size_t n = geometry_.size();
    for (std::size_t c = 0; c < 4; ++c) dct_.inverse(coeffs.subspan(c * n, n), field.subspan(c * n, n));
  }
  void to_coefficients(std::span<const double> field, std::span<double> coeffs) const {
    const std::size_t n = geometry_.size();
    for (std::size_t c = 0; c < 4; ++c) dct_.forward(field.subspan(c * n, n), coeffs.subspan(c * n, n));
  }

  /// Euler-Lagrange operator in coefficient space: D^T (P^T P / L) D + gamma Lambda^4.
  void normal_apply(std::span<const double> coeffs, std::span<double> out) {
    to_field(coeffs, scratch_field_);
    forward(scratch_field_, scratch_data_);
    adjoint(scratch_data_, scratch_field_);
    const double inv_l = 1.0 / static_cast<double>(sample_count());
    for (auto& v : scratch_field_) v *= inv_l;
    to_coefficients(scratch_field_, out);
    const std::size_t n = geometry_.size();
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t q = 0; q < n; ++q) out[c * n + q] += gamma_ * penalty_[q] * coeffs[c * n + q];
  }

  /// Right-hand side D^T P^T s / L.
  std::vector<double> rhs() {
    std::vector<double> field(unknowns()), out(unknowns());
    adjoint(data_, field);
    const double inv_l = 1.0 / static_cast<double>(sample_count());
    for (auto& v : field) v *= inv_l;
    to_coefficients(field, out);
    return out;
  }

  /// F[A] for coefficients.
  double data_fidelity(std::span<const double> coeffs) {
    to_field(coeffs, scratch_field_);
    forward(scratch_field_, scratch_data_);
    double sum = 0.0;
    for (std::size_t q = 0; q < data_.size(); ++q) {
      const double d = data_[q] - scratch_data_[q];
      sum += d * d;
    }
    return sum / static_cast<double>(sample_count());
  }

  /// gamma R[A] for coefficients (Parseval).
  double regularization(std::span<const double> coeffs) const {
    const std::size_t n = geometry_.size();
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t q = 0; q < n; ++q) sum += penalty_[q] * coeffs[c * n + q] * coeffs[c * n + q];
    return gamma_ * sum;
  }

  double energy(std::span<const double> coeffs) { return data_fidelity(coeffs) + regularization(coeffs); }

 private:
  GridGeometry geometry_;
  double gamma_;
  detail::Dct2d dct_;
  std::vector<double> data_;
  std::vector<Vec2> vel_;
  std::vector<InterpolationStencil> stencils_;
  std::vector<double> penalty_;
  std::size_t outside_ = 0;
  std::vector<double> scratch_field_, scratch_data_;
};

inline MatrixFieldGrid field_from_vector(const GridGeometry& geometry, std::span<const double> field) {
  MatrixFieldGrid out(geometry, 2);
  std::copy(field.begin(), field.end(), out.data().begin());
  return out;
}

/// Core-stage reconstruction by CG on the Euler-Lagrange system in DCT coefficients.
inline CoreStageResult core_stage_solve(
    const ScanRecord& scan, const CoreStageConfig& cfg, const PhysicalParams& params,
    const std::function<void(std::size_t, std::span<const double>)>& on_iterate = {}) {
  cfg.validate();
  if (scan.model != SignalModel::langevin)
    throw ConfigError("core stage expects Langevin-model data; apply relaxation adaption first");
  CoreStageProblem problem(scan, params, cfg.geometry, cfg.gamma);
  const auto b = problem.rhs();
  std::vector<double> coeffs(problem.unknowns(), 0.0);
  const auto cg = conjugate_gradient(
      [&](std::span<const double> in, std::span<double> out) { problem.normal_apply(in, out); }, b, coeffs,
      cfg.cg_max_iterations, cfg.cg_tolerance, on_iterate);

  CoreStageResult result;
  std::vector<double> field(problem.unknowns());
  problem.to_field(coeffs, field);
  result.field = field_from_vector(cfg.geometry, field);
  result.report.iterations = cg.iterations;
  result.report.relative_residual = cg.relative_residual;
  result.report.converged = cg.converged;
  result.report.data_fidelity = problem.data_fidelity(coeffs);
  result.report.energy = result.report.data_fidelity + problem.regularization(coeffs);
  result.report.outside_samples = problem.outside_samples();
  return result;
}

}  // namespace mpirelax
