#pragma once

// Deconvolution stage: recover rho from a reconstructed core response A by
// half-quadratic splitting over the multi-kernel data term
//   sum_ij beta_ij |K^ij_h * rho - A^ij|^2
// alternating a CG solve of the quadratic subproblem with a plug-in Gaussian
// denoiser. The splitting weight follows nu_{k+1} = lambda / sigma_{k+1}^2
// with lambda = nu_0 sigma_1^2 and sigma estimated from the current iterate.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mpirelax/cg.hpp"
#include "mpirelax/convolution.hpp"
#include "mpirelax/core_stage.hpp"
#include "mpirelax/fft.hpp"

namespace mpirelax {

/// Robust noise level: median |HH| / 0.6745 over the diagonal details of a
/// single-level orthonormal Haar decomposition.
inline double noise_estimator(const ScalarGrid& image) {
  if (image.nx() < 4 || image.ny() < 4) throw ConfigError("noise estimator needs a grid of at least 4x4");
  std::vector<double> detail;
  detail.reserve((image.nx() / 2) * (image.ny() / 2));
  for (std::size_t i = 0; i + 1 < image.nx(); i += 2)
    for (std::size_t j = 0; j + 1 < image.ny(); j += 2)
      detail.push_back(
          std::abs(0.5 * (image(i, j) - image(i + 1, j) - image(i, j + 1) + image(i + 1, j + 1))));
  const std::size_t mid = detail.size() / 2;
  std::nth_element(detail.begin(), detail.begin() + static_cast<long>(mid), detail.end());
  double median = detail[mid];
  if (detail.size() % 2 == 0) {
    const double lower = *std::max_element(detail.begin(), detail.begin() + static_cast<long>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

/// (image, noise level) -> denoised image of the same shape.
using Denoiser = std::function<ScalarGrid(const ScalarGrid&, double)>;

inline ScalarGrid identity_denoiser(const ScalarGrid& image, double) { return image; }

/// Strength of the spectral Tikhonov denoiser; chosen so that on a smooth
/// unit-amplitude 32x32 test image (Gaussian bump) corrupted by white noise of level 0.05 the
/// mean-square error is minimized when the denoiser is told the true sigma.
inline constexpr double kTikhonovStrength = 1000.0;

/// Spectral Tikhonov smoothing: DCT coefficient (p, q) is multiplied by
/// 1 / (1 + c sigma^2 lambda_pq^2) with lambda_pq the Neumann Laplacian
/// eigenvalue. Leaves the DC coefficient (and thus the mean) untouched.
inline ScalarGrid tikhonov_denoiser(const ScalarGrid& image, double sigma, double strength = kTikhonovStrength) {
  if (sigma == 0.0) return image;
  detail::Dct2d dct(image.nx(), image.ny());
  std::vector<double> coeffs(image.size());
  dct.forward(image.values(), coeffs);
  const auto ev = laplacian_eigenvalues(image.nx(), image.ny());
  const double s2 = strength * sigma * sigma;
  for (std::size_t q = 0; q < coeffs.size(); ++q) coeffs[q] /= 1.0 + s2 * ev[q] * ev[q];
  ScalarGrid out(image.geometry());
  dct.inverse(coeffs, out.values());
  return out;
}

inline ScalarGrid default_denoiser(const ScalarGrid& image, double sigma) { return tikhonov_denoiser(image, sigma); }

namespace detail {
inline std::size_t percent_cells(std::size_t n, double pct) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * pct / 100.0 - 1e-9));
}
inline void check_percent(double pct) {
  if (!(pct >= 0.0 && pct < 50.0)) throw ConfigError("padding/cut percentages must lie in [0, 50)");
}
}  // namespace detail

/// Extends the grid by ceil(n * pct / 100) cells per side, replicating edge values.
inline ScalarGrid pad_replicate(const ScalarGrid& image, double pct) {
  detail::check_percent(pct);
  const std::size_t px = detail::percent_cells(image.nx(), pct), py = detail::percent_cells(image.ny(), pct);
  const auto& g = image.geometry();
  const Fov fov{g.fov.x_min - static_cast<double>(px) * g.hx(), g.fov.x_max + static_cast<double>(px) * g.hx(),
                g.fov.y_min - static_cast<double>(py) * g.hy(), g.fov.y_max + static_cast<double>(py) * g.hy()};
  ScalarGrid out(GridGeometry(image.nx() + 2 * px, image.ny() + 2 * py, fov));
  for (std::size_t i = 0; i < out.nx(); ++i) {
    const std::size_t si = std::clamp<long>(static_cast<long>(i) - static_cast<long>(px), 0, static_cast<long>(image.nx()) - 1);
    for (std::size_t j = 0; j < out.ny(); ++j) {
      const std::size_t sj =
          std::clamp<long>(static_cast<long>(j) - static_cast<long>(py), 0, static_cast<long>(image.ny()) - 1);
      out(i, j) = image(si, sj);
    }
  }
  return out;
}

/// Removes ceil(n * pct / 100) cells per side, where n is the size of the
/// original (unpadded) grid along each axis.
inline ScalarGrid cut_border(const ScalarGrid& image, double pct, std::size_t reference_nx, std::size_t reference_ny) {
  detail::check_percent(pct);
  const std::size_t cx = detail::percent_cells(reference_nx, pct), cy = detail::percent_cells(reference_ny, pct);
  if (image.nx() <= 2 * cx + 1 || image.ny() <= 2 * cy + 1) throw ConfigError("cut removes the whole grid");
  const auto& g = image.geometry();
  const Fov fov{g.fov.x_min + static_cast<double>(cx) * g.hx(), g.fov.x_max - static_cast<double>(cx) * g.hx(),
                g.fov.y_min + static_cast<double>(cy) * g.hy(), g.fov.y_max - static_cast<double>(cy) * g.hy()};
  ScalarGrid out(GridGeometry(image.nx() - 2 * cx, image.ny() - 2 * cy, fov));
  for (std::size_t i = 0; i < out.nx(); ++i)
    for (std::size_t j = 0; j < out.ny(); ++j) out(i, j) = image(i + cx, j + cy);
  return out;
}

/// Pad by padding_pct, then cut by cut_pct of the original size.
inline ScalarGrid pad_and_cut(const ScalarGrid& image, double padding_pct, double cut_pct) {
  return cut_border(pad_replicate(image, padding_pct), cut_pct, image.nx(), image.ny());
}

struct DeconvConfig {
  double nu0 = 1e-7;
  std::size_t iterations = 10;
  /// beta_11, beta_12, beta_21, beta_22.
  std::array<double, 4> beta{1.0, 1.0, 1.0, 1.0};
  std::size_t cg_max_iterations = 10000;
  double cg_tolerance = 1e-12;
  double padding_pct = 5.0;
  double cut_pct = 5.0;
  bool mask_padding = true;

  void validate() const {
    if (iterations < 1) throw ConfigError("deconvolution needs n_it >= 1");
    if (!(nu0 > 0.0)) throw ConfigError("nu0 must be positive");
    for (double b : beta)
      if (b != 0.0 && b != 1.0) throw ConfigError("beta weights must be 0 or 1");
    if (std::all_of(beta.begin(), beta.end(), [](double b) { return b == 0.0; }))
      throw ConfigError("at least one beta weight must be 1");
    if (!(cg_tolerance > 0.0 && cg_tolerance < 1.0)) throw ConfigError("CG tolerance must lie in (0, 1)");
    if (cg_max_iterations < 1) throw ConfigError("CG needs at least one iteration");
    detail::check_percent(padding_pct);
    detail::check_percent(cut_pct);
  }
};

/// Lower bound on the noise estimate; keeps lambda / sigma^2 finite.
inline constexpr double kSigmaFloor = 1e-12;

struct DeconvReport {
  double lambda = 0.0;
  std::vector<double> sigma;  // sigma_1 .. sigma_n_it
  std::vector<double> nu;     // nu_0 .. nu_n_it
  std::vector<std::size_t> cg_iterations;
  std::size_t sigma_clamped = 0;
  std::size_t cg_not_converged = 0;
};

struct DeconvResult {
  ScalarGrid rho;
  DeconvReport report;
};

/// The quadratic part of the splitting: C = sum_ij beta_ij a_ij^* a_ij on one grid.
class MultiKernelSystem {
 public:
  /// `mask` (optional, one weight per cell) restricts the data term to part of the grid.
  MultiKernelSystem(const GridGeometry& geometry, double h, const PhysicalParams& params, std::array<double, 4> beta,
                    std::vector<double> mask = {})
      : conv_(geometry, mpi_kernel_tables(geometry, h, params)), beta_(beta), size_(geometry.size()),
        mask_(std::move(mask)) {
    if (!mask_.empty() && mask_.size() != size_) throw ConfigError("data mask does not match the grid");
    for (auto& s : scratch_) s.resize(size_);
  }

  const GridGeometry& geometry() const { return conv_.geometry(); }

  /// out = C rho + nu rho.
  void apply(std::span<const double> rho, double nu, std::span<double> out) {
    conv_.apply(rho, {scratch_[0], scratch_[1], scratch_[2], scratch_[3]}, beta_);
    apply_mask();
    conv_.adjoint_sum({scratch_[0], scratch_[1], scratch_[2], scratch_[3]}, beta_, out);
    for (std::size_t q = 0; q < size_; ++q) out[q] += nu * rho[q];
  }

  /// sum_ij beta_ij a_ij^* A^ij.
  std::vector<double> data_term(const std::array<ScalarGrid, 4>& components) {
    for (std::size_t c = 0; c < 4; ++c) std::copy(components[c].data().begin(), components[c].data().end(), scratch_[c].begin());
    apply_mask();
    std::vector<double> out(size_);
    conv_.adjoint_sum({scratch_[0], scratch_[1], scratch_[2], scratch_[3]}, beta_, out);
    return out;
  }

  /// sum_ij beta_ij |a_ij rho - A^ij|^2.
  double residual(std::span<const double> rho, const std::array<ScalarGrid, 4>& components) {
    conv_.apply(rho, {scratch_[0], scratch_[1], scratch_[2], scratch_[3]}, beta_);
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (beta_[c] == 0.0) continue;
      for (std::size_t q = 0; q < size_; ++q) {
        const double d = scratch_[c][q] - components[c].values()[q];
        sum += (mask_.empty() ? 1.0 : mask_[q]) * d * d;
      }
    }
    return sum;
  }

 private:
  void apply_mask() {
    if (mask_.empty()) return;
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t q = 0; q < size_; ++q) scratch_[c][q] *= mask_[q];
  }

  MultiKernelConvolution conv_;
  std::array<double, 4> beta_;
  std::size_t size_;
  std::vector<double> mask_;
  std::array<std::vector<double>, 4> scratch_;
};

/// Plug-and-play HQS deconvolution of a core response. Runs exactly
/// cfg.iterations complete (solve, estimate, denoise, update) cycles and
/// returns the last denoised iterate, cut back to the retained region.
inline DeconvResult hqs_deconvolve(const MatrixFieldGrid& core, double h, const PhysicalParams& params,
                                   const DeconvConfig& cfg, const Denoiser& denoiser = default_denoiser) {
  cfg.validate();
  if (core.n() != 2) throw ConfigError("deconvolution expects a 2x2 core response");
  if (!core.all_finite()) throw DomainError("core response contains non-finite values");

  std::array<ScalarGrid, 4> padded;
  for (std::size_t c = 0; c < 4; ++c) padded[c] = pad_replicate(core.component_grid(c / 2, c % 2), cfg.padding_pct);
  const GridGeometry work = padded[0].geometry();
  std::vector<double> mask;
  if (cfg.mask_padding) {
    const std::size_t px = (work.nx - core.geometry().nx) / 2, py = (work.ny - core.geometry().ny) / 2;
    mask.assign(work.size(), 0.0);
    for (std::size_t i = px; i < work.nx - px; ++i)
      for (std::size_t j = py; j < work.ny - py; ++j) mask[work.index(i, j)] = 1.0;
  }
  MultiKernelSystem system(work, h, params, cfg.beta, std::move(mask));
  const std::vector<double> d = system.data_term(padded);

  DeconvResult result;
  auto& rep = result.report;
  ScalarGrid rho2(work);
  std::vector<double> rhs(work.size());
  double nu = cfg.nu0;
  rep.nu.push_back(nu);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    for (std::size_t q = 0; q < rhs.size(); ++q) rhs[q] = d[q] + nu * rho2.values()[q];
    ScalarGrid rho1 = rho2;
    const auto cg = conjugate_gradient(
        [&](std::span<const double> in, std::span<double> out) { system.apply(in, nu, out); }, rhs, rho1.values(),
        cfg.cg_max_iterations, cfg.cg_tolerance);
    rep.cg_iterations.push_back(cg.iterations);
    if (!cg.converged) ++rep.cg_not_converged;

    double sigma = noise_estimator(rho1);
    if (!(sigma >= kSigmaFloor)) {
      sigma = kSigmaFloor;
      ++rep.sigma_clamped;
    }
    rep.sigma.push_back(sigma);
    if (k == 0) rep.lambda = cfg.nu0 * sigma * sigma;
    rho2 = denoiser(rho1, sigma);
    if (!(rho2.geometry() == work)) throw ConfigError("denoiser changed the image shape");
    nu = rep.lambda / (sigma * sigma);
    rep.nu.push_back(nu);
  }
  result.rho = cut_border(rho2, cfg.cut_pct, core.geometry().nx, core.geometry().ny);
  return result;
}

}  // namespace mpirelax
