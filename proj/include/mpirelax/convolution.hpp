#pragma once

// Exact (linear, zero-extended) convolution of grid functions with kernels
// sampled at cell-center displacements, evaluated through zero-padded FFTs.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mpirelax/fft.hpp"
#include "mpirelax/grid.hpp"
#include "mpirelax/physics.hpp"

namespace mpirelax {

/// Kernel values k(di*hx, dj*hy) for di in [-(nx-1), nx-1], dj in [-(ny-1), ny-1].
class KernelTable {
 public:
  KernelTable(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), values_((2 * nx - 1) * (2 * ny - 1), 0.0) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double& at(long di, long dj) { return values_[flat(di, dj)]; }
  double at(long di, long dj) const { return values_[flat(di, dj)]; }

 private:
  std::size_t flat(long di, long dj) const {
    return static_cast<std::size_t>(di + static_cast<long>(nx_) - 1) * (2 * ny_ - 1) +
           static_cast<std::size_t>(dj + static_cast<long>(ny_) - 1);
  }
  std::size_t nx_, ny_;
  std::vector<double> values_;
};

/// Tabulates f(dx, dy) on all cell-center displacements of `geometry`.
inline KernelTable tabulate_kernel(const GridGeometry& geometry, const std::function<double(double, double)>& f) {
  KernelTable table(geometry.nx, geometry.ny);
  const long nx = static_cast<long>(geometry.nx), ny = static_cast<long>(geometry.ny);
  for (long di = -(nx - 1); di <= nx - 1; ++di)
    for (long dj = -(ny - 1); dj <= ny - 1; ++dj)
      table.at(di, dj) = f(static_cast<double>(di) * geometry.hx(), static_cast<double>(dj) * geometry.hy());
  return table;
}

/// Matrix-kernel component (a, b) of the core operator in quadrature form:
/// K_h(G d)_ab * |det G| * hx * hy, i.e. the field-coordinate integral of the
/// MPI kernel over one cell.
inline std::vector<KernelTable> mpi_kernel_tables(const GridGeometry& geometry, double h, const PhysicalParams& params) {
  const double weight = std::abs(determinant(params.gradient)) * geometry.hx() * geometry.hy();
  std::vector<KernelTable> tables(4, KernelTable(geometry.nx, geometry.ny));
  const long nx = static_cast<long>(geometry.nx), ny = static_cast<long>(geometry.ny);
  for (long di = -(nx - 1); di <= nx - 1; ++di) {
    for (long dj = -(ny - 1); dj <= ny - 1; ++dj) {
      const Vec2 d{static_cast<double>(di) * geometry.hx(), static_cast<double>(dj) * geometry.hy()};
      const Mat2 k = mpi_kernel<2>(matvec(params.gradient, d), h);
      for (std::size_t c = 0; c < 4; ++c) tables[c].at(di, dj) = k[c] * weight;
    }
  }
  return tables;
}

/// A bank of kernels sharing one grid; applies each as an exact linear
/// convolution restricted to the grid, plus the adjoint (correlation).
///
/// Not safe for concurrent use of one instance (it owns FFT scratch); create
/// one per thread.
class MultiKernelConvolution {
 public:
  MultiKernelConvolution(const GridGeometry& geometry, const std::vector<KernelTable>& kernels)
      : geometry_(geometry), fft_(2 * geometry.nx, 2 * geometry.ny) {
    const std::size_t mx = fft_.mx(), my = fft_.my();
    std::vector<double> embedded(mx * my);
    for (const auto& table : kernels) {
      if (table.nx() != geometry.nx || table.ny() != geometry.ny) throw ConfigError("kernel table does not match grid");
      std::fill(embedded.begin(), embedded.end(), 0.0);
      const long nx = static_cast<long>(geometry.nx), ny = static_cast<long>(geometry.ny);
      for (long di = -(nx - 1); di <= nx - 1; ++di) {
        const std::size_t ci = static_cast<std::size_t>((di + static_cast<long>(mx)) % static_cast<long>(mx));
        for (long dj = -(ny - 1); dj <= ny - 1; ++dj) {
          const std::size_t cj = static_cast<std::size_t>((dj + static_cast<long>(my)) % static_cast<long>(my));
          embedded[ci * my + cj] = table.at(di, dj);
        }
      }
      std::vector<std::complex<double>> spectrum(fft_.spectrum_size());
      fft_.forward(embedded, spectrum);
      const double inv = 1.0 / static_cast<double>(mx * my);
      for (auto& z : spectrum) z *= inv;
      spectra_.push_back(std::move(spectrum));
    }
    padded_.resize(mx * my);
    work_.resize(fft_.spectrum_size());
    accum_.resize(fft_.spectrum_size());
    input_spectrum_.resize(fft_.spectrum_size());
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t kernel_count() const { return spectra_.size(); }

  /// outputs[k] = (kernel_k * input) on the grid, for every k with selected[k].
  void apply(std::span<const double> input, std::vector<std::span<double>> outputs,
             std::span<const double> selected = {}) {
    load(input);
    fft_.forward(padded_, input_spectrum_);
    for (std::size_t k = 0; k < spectra_.size(); ++k) {
      if (!selected.empty() && selected[k] == 0.0) continue;
      for (std::size_t q = 0; q < work_.size(); ++q) work_[q] = input_spectrum_[q] * spectra_[k][q];
      fft_.inverse(work_, padded_);
      store(outputs[k]);
    }
  }

  /// output = sum_k weights[k] * adjoint_k(inputs[k]).
  void adjoint_sum(std::vector<std::span<const double>> inputs, std::span<const double> weights,
                   std::span<double> output) {
    std::fill(accum_.begin(), accum_.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t k = 0; k < spectra_.size(); ++k) {
      if (weights[k] == 0.0) continue;
      load(inputs[k]);
      fft_.forward(padded_, work_);
      for (std::size_t q = 0; q < work_.size(); ++q) accum_[q] += weights[k] * work_[q] * std::conj(spectra_[k][q]);
    }
    fft_.inverse(accum_, padded_);
    store(output);
  }

 private:
  void load(std::span<const double> input) {
    std::fill(padded_.begin(), padded_.end(), 0.0);
    const std::size_t my = fft_.my();
    for (std::size_t i = 0; i < geometry_.nx; ++i)
      for (std::size_t j = 0; j < geometry_.ny; ++j) padded_[i * my + j] = input[geometry_.index(i, j)];
  }
  void store(std::span<double> output) const {
    const std::size_t my = fft_.my();
    for (std::size_t i = 0; i < geometry_.nx; ++i)
      for (std::size_t j = 0; j < geometry_.ny; ++j) output[geometry_.index(i, j)] = padded_[i * my + j];
  }

  GridGeometry geometry_;
  detail::RealFft2d fft_;
  std::vector<std::vector<std::complex<double>>> spectra_;
  std::vector<double> padded_;
  std::vector<std::complex<double>> work_, accum_, input_spectrum_;
};

/// The discrete MPI core operator rho -> K_h * rho on one grid (2D, four components).
class CoreOperator {
 public:
  CoreOperator(const GridGeometry& geometry, double h, const PhysicalParams& params)
      : conv_(geometry, mpi_kernel_tables(geometry, h, params)) {}

  const GridGeometry& geometry() const { return conv_.geometry(); }

  MatrixFieldGrid apply(const ScalarGrid& rho) {
    require_same_geometry(rho.geometry(), geometry(), "core operator");
    MatrixFieldGrid out(geometry(), 2);
    conv_.apply(rho.values(), {out.component(0, 0), out.component(0, 1), out.component(1, 0), out.component(1, 1)});
    return out;
  }

  ScalarGrid adjoint(const MatrixFieldGrid& field) {
    require_same_geometry(field.geometry(), geometry(), "core operator adjoint");
    ScalarGrid out(geometry());
    const std::vector<double> ones(4, 1.0);
    conv_.adjoint_sum({field.component(0, 0), field.component(0, 1), field.component(1, 0), field.component(1, 1)},
                      ones, out.values());
    return out;
  }

 private:
  MultiKernelConvolution conv_;
};

/// A_h[rho] sampled at the cell centers of rho's grid.
inline MatrixFieldGrid core_operator_apply(const ScalarGrid& rho, double h, const PhysicalParams& params) {
  if (!rho.all_finite()) throw DomainError("concentration contains non-finite values");
  CoreOperator op(rho.geometry(), h, params);
  return op.apply(rho);
}

}  // namespace mpirelax
