#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mpirelax/error.hpp"
#include "mpirelax/physics.hpp"

namespace mpirelax {

/// FFP trajectory sampled at t_k = k * dt, k = 1..L. Positions in meters.
struct Trajectory {
  enum class Kind { lissajous, tabulated };

  Kind kind = Kind::tabulated;
  double amplitude_x = 0.0;  // m
  double amplitude_y = 0.0;  // m
  double frequency_x = 0.0;  // Hz
  double frequency_y = 0.0;  // Hz
  double dt = 0.0;           // s
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;

  std::size_t size() const { return positions.size(); }
  double repetition_time() const { return static_cast<double>(size()) * dt; }

  /// Analytic position and velocity of a Lissajous trajectory at time t.
  std::pair<Vec2, Vec2> evaluate(double t) const {
    if (kind != Kind::lissajous) throw ConfigError("only Lissajous trajectories can be evaluated off-sample");
    const double wx = 2.0 * std::numbers::pi * frequency_x;
    const double wy = 2.0 * std::numbers::pi * frequency_y;
    return {{amplitude_x * std::cos(wx * t), amplitude_y * std::cos(wy * t)},
            {-amplitude_x * wx * std::sin(wx * t), -amplitude_y * wy * std::sin(wy * t)}};
  }
};

/// r(t) = (A_x cos(2 pi f_x t), A_y cos(2 pi f_y t)) with analytic velocity, sampled at t_k = k dt, k = 1..L.
inline Trajectory lissajous_trajectory(double amplitude_x, double amplitude_y, double frequency_x, double frequency_y,
                                       double dt, std::size_t samples) {
  if (!(amplitude_x > 0.0) || !(amplitude_y > 0.0) || !(frequency_x > 0.0) || !(frequency_y > 0.0) || !(dt > 0.0) ||
      samples == 0)
    throw DomainError("Lissajous parameters must be positive");
  Trajectory traj;
  traj.kind = Trajectory::Kind::lissajous;
  traj.amplitude_x = amplitude_x;
  traj.amplitude_y = amplitude_y;
  traj.frequency_x = frequency_x;
  traj.frequency_y = frequency_y;
  traj.dt = dt;
  traj.positions.reserve(samples);
  traj.velocities.reserve(samples);
  for (std::size_t k = 1; k <= samples; ++k) {
    auto [r, v] = traj.evaluate(static_cast<double>(k) * dt);
    traj.positions.push_back(r);
    traj.velocities.push_back(v);
  }
  return traj;
}

/// Number of samples covering one repetition period of the given duration.
inline std::size_t sample_count(double repetition_time, double dt) {
  return static_cast<std::size_t>(std::llround(repetition_time / dt));
}

enum class SignalModel { langevin = 0, debye = 1 };

inline std::string to_string(SignalModel m) { return m == SignalModel::langevin ? "langevin" : "debye"; }

/// Time series of (signal, FFP position, FFP velocity) triples for k = 1..L.
struct ScanRecord {
  double dt = 0.0;
  SignalModel model = SignalModel::langevin;
  /// Relaxation time of the generating model; 0 for Langevin data.
  double tau = 0.0;
  /// Physical signal = calibration * A(r_k) G v_k, i.e. -mu0 m r for R = r I.
  double calibration = 1.0;
  /// Sample at t_0 = 0, used as the initial state of the relaxation recurrence.
  std::optional<Vec2> initial_sample;
  std::vector<Vec2> samples;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("scan record needs dt > 0");
    if (samples.size() != positions.size() || samples.size() != velocities.size())
      throw ConfigError("scan record arrays must have equal length");
  }
};

/// The scalar c with s_k = c * A(r_k) G v_k, i.e. -mu0 m r.
/// Requires an isotropic receive-coil sensitivity R = r I.
inline double signal_calibration(const PhysicalParams& params) {
  const Mat2& r = params.coil_sensitivity;
  if (r[1] != 0.0 || r[2] != 0.0 || r[0] != r[3])
    throw ConfigError("signal calibration requires an isotropic coil sensitivity R = r I");
  return -params.mu0 * params.particle_moment() * r[0];
}

}  // namespace mpirelax
