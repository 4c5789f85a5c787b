#include <gtest/gtest.h>

#include <cmath>

#include "mpirelax/metrics.hpp"
#include "test_util.hpp"

using namespace mpirelax;
using testutil::square_grid;

namespace {

ScalarGrid ramp(const GridGeometry& g) {
  ScalarGrid out(g);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) out(i, j) = 0.1 * static_cast<double>(i) + 0.03 * static_cast<double>(j * j % 7);
  return out;
}

// Window-by-window SSIM written out independently, with per-window sums.
double ssim_oracle(const ScalarGrid& x, const ScalarGrid& y) {
  double lo = y.data()[0], hi = y.data()[0];
  for (double v : y.data()) lo = std::min(lo, v), hi = std::max(hi, v);
  const double P = hi > lo ? hi - lo : 1.0;
  const double C1 = 1e-4 * P * P, C2 = 9e-4 * P * P;
  double sum = 0.0;
  int count = 0;
  for (std::size_t a = 0; a + 7 <= x.nx(); ++a)
    for (std::size_t b = 0; b + 7 <= x.ny(); ++b) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = a; i < a + 7; ++i)
        for (std::size_t j = b; j < b + 7; ++j) {
          sx += x(i, j);
          sy += y(i, j);
          sxx += x(i, j) * x(i, j);
          syy += y(i, j) * y(i, j);
          sxy += x(i, j) * y(i, j);
        }
      const double n = 49.0, mx = sx / n, my = sy / n;
      const double vx = sxx / n - mx * mx, vy = syy / n - my * my, cxy = sxy / n - mx * my;
      sum += (2 * mx * my + C1) * (2 * cxy + C2) / ((mx * mx + my * my + C1) * (vx + vy + C2));
      ++count;
    }
  return sum / count;
}

}  // namespace

TEST(Psnr, IdenticalImagesAreInfinite) {
  const auto r = ramp(square_grid(10));
  EXPECT_TRUE(std::isinf(psnr(r, r)));
}

TEST(Psnr, KnownValue) {
  const auto g = square_grid(10);
  ScalarGrid ref(g, 0.0), x(g, 0.1);
  ref(3, 3) = 2.0;
  x(3, 3) = 2.1;
  // MSE = 0.01, peak = 2, so 10 log10(400).
  EXPECT_NEAR(psnr(x, ref), 10.0 * std::log10(400.0), 1e-12);
}

TEST(Psnr, SymmetricErrorSignAndErrors) {
  const auto g = square_grid(8);
  const auto ref = ramp(g);
  ScalarGrid up = ref, down = ref;
  up(1, 1) += 0.5;
  down(1, 1) -= 0.5;
  EXPECT_DOUBLE_EQ(psnr(up, ref), psnr(down, ref));
  EXPECT_THROW(psnr(ScalarGrid(g), ScalarGrid(g)), DomainError);
  EXPECT_THROW(psnr(ref, ScalarGrid(square_grid(9))), ConfigError);
}

TEST(Ssim, IdenticalImagesScoreOne) {
  const auto r = ramp(square_grid(12));
  EXPECT_NEAR(ssim(r, r), 1.0, 1e-12);
}

TEST(Ssim, MatchesIndependentEvaluation) {
  const auto g = GridGeometry(13, 10, Fov{0, 1, 0, 1});
  const auto y = ramp(g);
  auto x = testutil::random_grid(g, 3);
  for (std::size_t q = 0; q < x.size(); ++q) x.data()[q] = y.data()[q] + 0.2 * x.data()[q];
  EXPECT_NEAR(ssim(x, y), ssim_oracle(x, y), 1e-10);
}

TEST(Ssim, InvariantToCommonScaleAndBounded) {
  const auto g = square_grid(16);
  const auto y = ramp(g);
  auto x = testutil::random_grid(g, 4);
  for (std::size_t q = 0; q < x.size(); ++q) x.data()[q] = y.data()[q] + 0.3 * x.data()[q];
  ScalarGrid xs = x, ys = y;
  for (auto& v : xs.data()) v *= 37.0;
  for (auto& v : ys.data()) v *= 37.0;
  const double s = ssim(x, y);
  EXPECT_LT(s, 1.0);
  EXPECT_GT(s, -1.0);
  EXPECT_NEAR(ssim(xs, ys), s, 1e-12);
}

TEST(Ssim, DegradesWithNoise) {
  const auto g = square_grid(20);
  const auto y = ramp(g);
  const auto n = testutil::random_grid(g, 5);
  double prev = 1.0;
  for (double amp : {0.01, 0.1, 1.0}) {
    ScalarGrid x = y;
    for (std::size_t q = 0; q < x.size(); ++q) x.data()[q] += amp * n.data()[q];
    const double s = ssim(x, y);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Ssim, RejectsSmallGrids) {
  const ScalarGrid g(square_grid(7), 1.0);
  EXPECT_THROW(ssim(g, g), ConfigError);
}
