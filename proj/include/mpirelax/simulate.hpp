#pragma once

// Synthetic scans: the adiabatic (Langevin) signal along a trajectory, the
// relaxed (Debye) signal obtained from it through the discretized Duhamel
// formula, and additive white Gaussian noise at a prescribed SNR.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>

#include "mpirelax/convolution.hpp"
#include "mpirelax/interpolation.hpp"
#include "mpirelax/scan.hpp"

namespace mpirelax {

/// s_ad(t_k) = -mu0 m R A_{H_sat}[rho](r_k) G v_k with the core response
/// interpolated from rho's grid by the same cosine scheme the core stage uses.
inline ScanRecord forward_langevin(const ScalarGrid& rho, const Trajectory& traj, const PhysicalParams& params) {
  params.validate();
  if (traj.positions.size() != traj.velocities.size()) throw ConfigError("trajectory arrays differ in length");
  for (const auto& r : traj.positions)
    if (!rho.geometry().fov.contains(r[0], r[1])) throw DomainError("trajectory leaves the FOV of the concentration grid");

  const MatrixFieldGrid core = core_operator_apply(rho, params.h_sat(), params);
  const double c = signal_calibration(params);

  ScanRecord rec;
  rec.dt = traj.dt;
  rec.model = SignalModel::langevin;
  rec.calibration = c;
  rec.positions = traj.positions;
  rec.velocities = traj.velocities;
  rec.samples.resize(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Mat2 a = interpolate_matrix_field(core, traj.positions[k]);
    const Vec2 gv = matvec(params.gradient, traj.velocities[k]);
    const Vec2 s = matvec(a, gv);
    rec.samples[k] = {c * s[0], c * s[1]};
  }
  if (traj.kind == Trajectory::Kind::lissajous) {
    auto [r0, v0] = traj.evaluate(0.0);
    const Vec2 s = matvec(interpolate_matrix_field(core, r0), matvec(params.gradient, v0));
    rec.initial_sample = Vec2{c * s[0], c * s[1]};
  }
  return rec;
}

/// s_n = alpha s_{n-1} + (1 - alpha) s_ad,n with alpha = exp(-dt/tau), the
/// piecewise-constant quadrature of the Duhamel formula. The initial state
/// defaults to s_ad,1. tau = 0 is the adiabatic limit and returns s_ad.
inline ScanRecord forward_debye(const ScanRecord& s_ad, double tau, std::optional<Vec2> s0 = std::nullopt) {
  s_ad.validate();
  if (std::isnan(tau) || tau < 0.0) throw DomainError("relaxation time must be non-negative");
  if (s_ad.size() == 0) throw DomainError("forward_debye needs at least one sample");
  if (tau == 0.0) return s_ad;
  const double alpha = std::exp(-s_ad.dt / tau);
  ScanRecord out = s_ad;
  out.model = SignalModel::debye;
  out.tau = tau;
  Vec2 prev = s0.value_or(s_ad.samples.front());
  out.initial_sample = prev;
  for (std::size_t n = 0; n < s_ad.size(); ++n) {
    for (std::size_t c = 0; c < 2; ++c) prev[c] = alpha * prev[c] + (1.0 - alpha) * s_ad.samples[n][c];
    if (!std::isfinite(prev[0]) || !std::isfinite(prev[1])) throw NumericalError("non-finite value in Debye recurrence");
    out.samples[n] = prev;
  }
  return out;
}

enum class NoisePower { per_channel, global };

/// Adds white Gaussian noise so that 10 log10(P_signal / P_noise) = snr_db,
/// with the signal power taken per channel (or over both channels). An
/// infinite snr_db returns the scan unchanged. Deterministic for a given seed.
inline ScanRecord add_noise(const ScanRecord& scan, double snr_db, std::uint64_t seed,
                            NoisePower mode = NoisePower::per_channel) {
  scan.validate();
  if (std::isinf(snr_db) && snr_db > 0.0) return scan;
  if (!std::isfinite(snr_db)) throw DomainError("SNR must be finite or +infinity");
  double power[2] = {0.0, 0.0};
  for (const auto& s : scan.samples) {
    power[0] += s[0] * s[0];
    power[1] += s[1] * s[1];
  }
  const double count = static_cast<double>(std::max<std::size_t>(scan.size(), 1));
  power[0] /= count;
  power[1] /= count;
  if (power[0] == 0.0 && power[1] == 0.0) throw DomainError("cannot set an SNR on an all-zero signal");
  if (mode == NoisePower::global) power[0] = power[1] = 0.5 * (power[0] + power[1]);
  const double ratio = std::pow(10.0, snr_db / 10.0);
  const double sigma[2] = {std::sqrt(power[0] / ratio), std::sqrt(power[1] / ratio)};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ScanRecord out = scan;
  if (out.initial_sample) {
    for (std::size_t c = 0; c < 2; ++c) (*out.initial_sample)[c] += sigma[c] * normal(rng);
  }
  for (auto& s : out.samples)
    for (std::size_t c = 0; c < 2; ++c) s[c] += sigma[c] * normal(rng);
  return out;
}

}  // namespace mpirelax
