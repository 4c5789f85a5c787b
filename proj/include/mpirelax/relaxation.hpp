#pragma once

// Relaxation adaption: maps Debye-model signal samples to the Langevin-model
// samples that produced them by inverting the first-order recurrence of the
// discretized Volterra equation, one channel at a time.

#include <array>
#include <cmath>
#include <limits>

#include "mpirelax/error.hpp"
#include "mpirelax/scan.hpp"

namespace mpirelax {

/// Per-channel relaxation times; tau = 0 disables the adaption on that channel.
struct RelaxationParams {
  std::array<double, 2> tau{0.0, 0.0};
  double dt = 0.0;

  static RelaxationParams uniform(double tau, double dt) { return {{tau, tau}, dt}; }

  /// alpha_i = exp(-dt / tau_i), 0 for a disabled channel.
  double alpha(std::size_t channel) const {
    const double t = tau[channel];
    return t == 0.0 ? 0.0 : std::exp(-dt / t);
  }
};

/// Below this gap 1 - alpha the recurrence is treated as singular.
inline constexpr double kMinAlphaGap = 1e-12;

/// s_ad,n = (s_n - alpha s_{n-1}) / (1 - alpha), n = 1..L, with s_0 the stored
/// initial sample (or s_1 when none is stored).
inline ScanRecord relaxation_adaption(const ScanRecord& scan, const RelaxationParams& params) {
  scan.validate();
  if (scan.size() == 0) throw DomainError("relaxation adaption needs at least one sample");
  if (!(params.dt > 0.0)) throw DomainError("relaxation adaption needs dt > 0");
  std::array<double, 2> alpha{};
  for (std::size_t c = 0; c < 2; ++c) {
    if (std::isnan(params.tau[c]) || params.tau[c] < 0.0) throw DomainError("relaxation times must be non-negative");
    alpha[c] = params.alpha(c);
    if (!(alpha[c] < 1.0)) throw DomainError("alpha must be below 1 (tau too large for dt)");
    if (params.tau[c] > 0.0 && 1.0 - alpha[c] < kMinAlphaGap)
      throw NumericalError("relaxation adaption is singular for dt << tau (1 - alpha < 1e-12); needs regularization");
  }

  ScanRecord out = scan;
  out.model = SignalModel::langevin;
  out.tau = 0.0;
  Vec2 prev = scan.initial_sample.value_or(scan.samples.front());
  for (std::size_t n = 0; n < scan.size(); ++n) {
    const Vec2& cur = scan.samples[n];
    for (std::size_t c = 0; c < 2; ++c) {
      if (params.tau[c] == 0.0) continue;
      out.samples[n][c] = (cur[c] - alpha[c] * prev[c]) / (1.0 - alpha[c]);
    }
    prev = cur;
  }
  return out;
}

/// Row-sum condition number (1 - e^{-T/tau}) (1 + alpha) / (1 - alpha) of the
/// lower-triangular quadrature matrix; +infinity for alpha = 1.
inline double condition_number(double alpha, double total_time, double tau) {
  if (std::isnan(alpha) || alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must lie in [0, 1]");
  if (!(total_time > 0.0) || !(tau > 0.0)) throw DomainError("T and tau must be positive");
  if (alpha == 1.0) return std::numeric_limits<double>::infinity();
  return -std::expm1(-total_time / tau) * (1.0 + alpha) / (1.0 - alpha);
}

}  // namespace mpirelax
