#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mpirelax/relaxation.hpp"
#include "mpirelax/simulate.hpp"
#include "test_util.hpp"

using namespace mpirelax;

namespace {

ScanRecord random_scan(std::size_t L, std::uint64_t seed) {
  ScanRecord s;
  s.dt = 4e-7;
  const auto v = testutil::random_vector(2 * L, seed);
  for (std::size_t k = 0; k < L; ++k) {
    s.samples.push_back({v[2 * k], v[2 * k + 1]});
    s.positions.push_back({0.0, 0.0});
    s.velocities.push_back({0.0, 0.0});
  }
  return s;
}

// Dense lower-triangular B with B_nk = (1 - alpha) alpha^(n-k).
std::vector<std::vector<double>> dense_b(std::size_t L, double alpha) {
  std::vector<std::vector<double>> b(L, std::vector<double>(L, 0.0));
  for (std::size_t n = 0; n < L; ++n)
    for (std::size_t k = 0; k <= n; ++k) b[n][k] = (1.0 - alpha) * std::pow(alpha, static_cast<double>(n - k));
  return b;
}

double inf_norm(const std::vector<std::vector<double>>& m) {
  double best = 0.0;
  for (const auto& row : m) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

// Inverse of a lower-triangular matrix by forward substitution on unit vectors.
std::vector<std::vector<double>> lower_inverse(const std::vector<std::vector<double>>& b) {
  const std::size_t L = b.size();
  std::vector<std::vector<double>> inv(L, std::vector<double>(L, 0.0));
  for (std::size_t col = 0; col < L; ++col)
    for (std::size_t n = 0; n < L; ++n) {
      double s = n == col ? 1.0 : 0.0;
      for (std::size_t k = 0; k < n; ++k) s -= b[n][k] * inv[k][col];
      inv[n][col] = s / b[n][n];
    }
  return inv;
}

}  // namespace

TEST(RelaxationAdaption, ZeroTauIsIdentity) {
  const auto s = random_scan(30, 1);
  const auto out = relaxation_adaption(s, RelaxationParams::uniform(0.0, s.dt));
  EXPECT_EQ(out.samples, s.samples);
  EXPECT_EQ(out.model, SignalModel::langevin);
}

TEST(RelaxationAdaption, InvertsForwardRecurrence) {
  const auto s = random_scan(1632, 2);
  for (double tau : {1e-7, 1e-6, 5e-6, 1e-5, 5e-5}) {
    const auto relaxed = forward_debye(s, tau, s.samples.front());
    const auto back = relaxation_adaption(relaxed, RelaxationParams::uniform(tau, s.dt));
    double err = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k)
      for (std::size_t c = 0; c < 2; ++c)
        err = std::max(err, std::abs(back.samples[k][c] - s.samples[k][c]) / std::max(1e-3, std::abs(s.samples[k][c])));
    EXPECT_LT(err, 1e-12) << tau;
  }
}

TEST(RelaxationAdaption, EqualsDenseTriangularSolve) {
  const std::size_t L = 64;
  const double tau = 3e-6;
  auto s = random_scan(L, 3);
  s.initial_sample = Vec2{0.25, -0.6};
  const double alpha = std::exp(-s.dt / tau);
  const auto b = dense_b(L, alpha);
  const auto out = relaxation_adaption(s, RelaxationParams::uniform(tau, s.dt));
  for (std::size_t c = 0; c < 2; ++c) {
    // Solve B x = s - alpha^n s0 by forward substitution.
    std::vector<double> x(L);
    for (std::size_t n = 0; n < L; ++n) {
      double r = s.samples[n][c] - std::pow(alpha, static_cast<double>(n + 1)) * (*s.initial_sample)[c];
      for (std::size_t k = 0; k < n; ++k) r -= b[n][k] * x[k];
      x[n] = r / b[n][n];
      EXPECT_NEAR(out.samples[n][c], x[n], 1e-10 * std::max(1.0, std::abs(x[n])));
    }
  }
}

TEST(RelaxationAdaption, PerChannelTimes) {
  const auto s = random_scan(100, 4);
  ScanRecord relaxed = s;
  const auto rx = forward_debye(s, 2e-6), ry = forward_debye(s, 7e-6);
  for (std::size_t k = 0; k < s.size(); ++k) relaxed.samples[k] = {rx.samples[k][0], ry.samples[k][1]};
  relaxed.initial_sample = Vec2{s.samples[0][0], s.samples[0][1]};
  const auto back = relaxation_adaption(relaxed, RelaxationParams{{2e-6, 7e-6}, s.dt});
  for (std::size_t k = 0; k < s.size(); ++k)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(back.samples[k][c], s.samples[k][c], 1e-12);
}

TEST(RelaxationAdaption, Linear) {
  const auto a = random_scan(200, 5), b = random_scan(200, 6);
  ScanRecord mix = a;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t c = 0; c < 2; ++c) mix.samples[k][c] = 2.0 * a.samples[k][c] - 0.5 * b.samples[k][c];
  const auto p = RelaxationParams::uniform(4e-6, a.dt);
  const auto ra = relaxation_adaption(a, p), rb = relaxation_adaption(b, p), rm = relaxation_adaption(mix, p);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_NEAR(rm.samples[k][c], 2.0 * ra.samples[k][c] - 0.5 * rb.samples[k][c], 1e-11);
}

TEST(RelaxationAdaption, GuardsAgainstSingularRecurrence) {
  const auto s = random_scan(10, 7);
  EXPECT_THROW(relaxation_adaption(s, RelaxationParams::uniform(1e9, s.dt)), NumericalError);
  EXPECT_THROW(relaxation_adaption(s, RelaxationParams::uniform(-1e-6, s.dt)), DomainError);
  EXPECT_THROW(relaxation_adaption(s, RelaxationParams::uniform(1e-6, 0.0)), DomainError);
}

TEST(RelaxationAdaption, NoiseAmplificationFactor) {
  const double tau = 2e-6, dt = 4e-7, alpha = std::exp(-dt / tau);
  const std::size_t L = 20000;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  ScanRecord s;
  s.dt = dt;
  for (std::size_t k = 0; k < L; ++k) {
    s.samples.push_back({n(rng), n(rng)});
    s.positions.push_back({0.0, 0.0});
    s.velocities.push_back({0.0, 0.0});
  }
  const auto out = relaxation_adaption(s, RelaxationParams::uniform(tau, dt));
  double var = 0.0;
  for (std::size_t k = 1; k < L; ++k) var += out.samples[k][0] * out.samples[k][0];
  var /= static_cast<double>(L - 1);
  const double expected = (1.0 + alpha * alpha) / ((1.0 - alpha) * (1.0 - alpha));
  EXPECT_NEAR(var, expected, 0.1 * expected);
}

TEST(ConditionNumber, PaperRange) {
  const double T = 652.8e-6, dt = 4e-7;
  const double lo = condition_number(std::exp(-dt / 1e-6), T, 1e-6);
  const double hi = condition_number(std::exp(-dt / 5e-5), T, 5e-5);
  EXPECT_NEAR(lo, 5.07, 0.02 * 5.07);
  EXPECT_NEAR(hi, 251.0, 0.02 * 251.0);
}

TEST(ConditionNumber, MatchesDenseMatrix) {
  const std::size_t L = 64;
  const double dt = 4e-7, T = static_cast<double>(L) * dt;
  for (double tau : {1e-6, 5e-6, 2e-5}) {
    const double alpha = std::exp(-dt / tau);
    const auto b = dense_b(L, alpha);
    const double dense = inf_norm(b) * inf_norm(lower_inverse(b));
    EXPECT_NEAR(condition_number(alpha, T, tau), dense, 0.05 * dense) << tau;
  }
}

TEST(ConditionNumber, Limits) {
  EXPECT_NEAR(condition_number(0.0, 1e-3, 1e-6), -std::expm1(-1e3), 1e-15);
  EXPECT_LE(condition_number(0.0, 1e-3, 1e-6), 1.0);
  EXPECT_TRUE(std::isinf(condition_number(1.0, 1e-3, 1e-6)));
}
