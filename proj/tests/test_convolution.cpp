#include <gtest/gtest.h>

#include <cmath>

#include "mpirelax/convolution.hpp"
#include "test_util.hpp"

using namespace mpirelax;
using testutil::random_grid;
using testutil::square_grid;

namespace {

// Direct O(N^2 M^2) evaluation of the core operator.
MatrixFieldGrid direct_core(const ScalarGrid& rho, double h, const PhysicalParams& p) {
  const auto& g = rho.geometry();
  const double w = std::abs(determinant(p.gradient)) * g.hx() * g.hy();
  MatrixFieldGrid out(g, 2);
  for (std::size_t k = 0; k < g.nx; ++k)
    for (std::size_t l = 0; l < g.ny; ++l)
      for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
          const Vec2 d{g.center_x(k) - g.center_x(i), g.center_y(l) - g.center_y(j)};
          const Mat2 kk = mpi_kernel<2>(matvec(p.gradient, d), h);
          for (std::size_t c = 0; c < 4; ++c) out.at(c / 2, c % 2, k, l) += kk[c] * w * rho(i, j);
        }
  return out;
}

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(CoreOperator, ZeroMapsToZero) {
  PhysicalParams p;
  const auto out = core_operator_apply(ScalarGrid(square_grid(8)), p.h_sat(), p);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(CoreOperator, ImpulseResponseIsKernelTimesCellArea) {
  PhysicalParams p;
  const auto g = square_grid(9);
  ScalarGrid rho(g);
  rho(3, 5) = 1.0;
  const auto out = core_operator_apply(rho, p.h_sat(), p);
  for (std::size_t k = 0; k < g.nx; ++k)
    for (std::size_t l = 0; l < g.ny; ++l) {
      const Vec2 d{g.center_x(k) - g.center_x(3), g.center_y(l) - g.center_y(5)};
      const Mat2 kk = mpi_kernel<2>(matvec(p.gradient, d), p.h_sat());
      for (std::size_t c = 0; c < 4; ++c) {
        const double expected = kk[c] * g.hx() * g.hy();
        EXPECT_NEAR(out.at(c / 2, c % 2, k, l), expected, 1e-12 * std::abs(kk[0] * g.hx() * g.hy()));
      }
    }
}

TEST(CoreOperator, FftMatchesDirectSummation) {
  PhysicalParams p;
  p.gradient = {-1.0, 0.3, 0.2, -1.5};
  const auto g = square_grid(8);
  const auto rho = random_grid(g, 11);
  const auto fast = core_operator_apply(rho, 3e-3, p);
  const auto slow = direct_core(rho, 3e-3, p);
  const double scale = testutil::max_abs(slow.data());
  EXPECT_LE(testutil::max_abs_diff(fast.data(), slow.data()), 1e-10 * scale);
}

TEST(CoreOperator, FftMatchesDirectSummationOnRectangularGrid) {
  PhysicalParams p;
  const GridGeometry g(7, 5, Fov{-0.01, 0.012, -0.005, 0.006});
  const auto rho = random_grid(g, 12);
  const auto fast = core_operator_apply(rho, p.h_sat(), p);
  const auto slow = direct_core(rho, p.h_sat(), p);
  EXPECT_LE(testutil::max_abs_diff(fast.data(), slow.data()), 1e-10 * testutil::max_abs(slow.data()));
}

TEST(CoreOperator, Linear) {
  PhysicalParams p;
  const auto g = square_grid(12);
  const auto a = random_grid(g, 1), b = random_grid(g, 2);
  ScalarGrid sum(g);
  for (std::size_t q = 0; q < g.size(); ++q) sum.data()[q] = a.data()[q] + b.data()[q];
  const auto fa = core_operator_apply(a, p.h_sat(), p), fb = core_operator_apply(b, p.h_sat(), p);
  const auto fs = core_operator_apply(sum, p.h_sat(), p);
  const double scale = testutil::max_abs(fs.data());
  for (std::size_t q = 0; q < fs.data().size(); ++q)
    EXPECT_NEAR(fs.data()[q], fa.data()[q] + fb.data()[q], 1e-12 * scale);
}

TEST(CoreOperator, AdjointIdentity) {
  PhysicalParams p;
  for (std::size_t n : {6, 10}) {
    const auto g = square_grid(n);
    CoreOperator op(g, p.h_sat(), p);
    const auto rho = random_grid(g, 100 + n);
    MatrixFieldGrid field(g, 2);
    const auto v = testutil::random_vector(field.data().size(), 200 + n);
    std::copy(v.begin(), v.end(), field.data().begin());
    const double lhs = inner(op.apply(rho).values(), field.values());
    const double rhs = inner(rho.values(), op.adjoint(field).values());
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
  }
}

TEST(MultiKernelConvolution, TraceKernelAdjointIdentity) {
  const auto g = square_grid(9);
  const double h = 2e-3;
  std::vector<KernelTable> tables{tabulate_kernel(g, [&](double x, double y) { return trace_kernel<2>({x, y}, h); })};
  MultiKernelConvolution conv(g, tables);
  const auto x = testutil::random_vector(g.size(), 7), y = testutil::random_vector(g.size(), 8);
  std::vector<double> cx(g.size()), cty(g.size());
  conv.apply(x, {std::span<double>(cx)});
  const std::vector<double> w{1.0};
  conv.adjoint_sum({std::span<const double>(y)}, w, cty);
  const double lhs = inner(cx, y), rhs = inner(x, cty);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(CoreOperator, RejectsMismatchedGrid) {
  PhysicalParams p;
  CoreOperator op(square_grid(6), p.h_sat(), p);
  EXPECT_THROW(op.apply(ScalarGrid(square_grid(7))), ConfigError);
}
