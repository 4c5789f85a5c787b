#pragma once

// Frequency-domain preprocessing of one repetition of scan data: per-bin SNR
// thresholding, a high-pass cut slightly above the n-th drive harmonic, and
// division by the analog-filter transfer function.
//
// Bin k of an L-point spectrum has frequency min(k, L - k) * df with
// df = 1 / (L dt); every operation treats bins k and L - k alike so that real
// signals stay real.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mpirelax/error.hpp"
#include "mpirelax/fft.hpp"
#include "mpirelax/scan.hpp"

namespace mpirelax {

using ComplexSpectrum = std::vector<std::complex<double>>;

struct SpectrumRecord {
  double dt = 0.0;
  std::array<ComplexSpectrum, 2> channels;
  /// Per-bin SNR estimates (|signal| / noise std) per channel.
  std::optional<std::array<std::vector<double>, 2>> snr;
  std::array<double, 2> thresholds{0.0, 0.0};
  /// Bins zeroed by the AF-TF guard, summed over channels.
  std::size_t guarded_bins = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return channels[0].size(); }
  double frequency_step() const { return 1.0 / (static_cast<double>(size()) * dt); }
  /// Folded (non-negative) frequency index of bin k.
  std::size_t folded_index(std::size_t k) const { return std::min(k, size() - k); }

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("spectrum record needs dt > 0");
    if (channels[1].size() != size()) throw ConfigError("spectrum channels differ in length");
    if (snr && ((*snr)[0].size() != size() || (*snr)[1].size() != size()))
      throw ConfigError("SNR table does not match the spectrum length");
  }
};

/// Forward DFT of each channel of the record's samples.
inline SpectrumRecord spectrum_of(const std::vector<Vec2>& samples, double dt) {
  if (samples.empty()) throw DomainError("cannot take the spectrum of an empty signal");
  const std::size_t L = samples.size();
  detail::ComplexFft1d fft(L);
  SpectrumRecord spec;
  spec.dt = dt;
  ComplexSpectrum in(L);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < L; ++k) in[k] = samples[k][c];
    spec.channels[c].resize(L);
    fft.forward(in, spec.channels[c]);
  }
  return spec;
}

inline SpectrumRecord spectrum_of(const ScanRecord& scan) { return spectrum_of(scan.samples, scan.dt); }

/// Stand-in for empty-scan measurements: spectra of `count` white-noise
/// records of standard deviation `sigma` per channel.
inline std::vector<SpectrumRecord> mock_empty_scans(std::size_t samples, double dt, std::array<double, 2> sigma,
                                                    std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SpectrumRecord> out;
  out.reserve(count);
  std::vector<Vec2> noise(samples);
  for (std::size_t m = 0; m < count; ++m) {
    for (auto& v : noise) v = {sigma[0] * normal(rng), sigma[1] * normal(rng)};
    out.push_back(spectrum_of(noise, dt));
  }
  return out;
}

/// SNR per bin: |signal bin| divided by the standard deviation of that bin
/// over an ensemble of empty scans (complex deviations from the mean).
inline void estimate_snr(SpectrumRecord& spec, const std::vector<SpectrumRecord>& empty_scans) {
  spec.validate();
  if (empty_scans.size() < 2) throw ConfigError("SNR estimation needs at least two empty scans");
  const std::size_t L = spec.size();
  std::array<std::vector<double>, 2> snr;
  for (std::size_t c = 0; c < 2; ++c) {
    snr[c].resize(L);
    for (std::size_t k = 0; k < L; ++k) {
      std::complex<double> mean = 0.0;
      for (const auto& e : empty_scans) {
        if (e.size() != L) throw ConfigError("empty scan length differs from the signal");
        mean += e.channels[c][k];
      }
      mean /= static_cast<double>(empty_scans.size());
      double var = 0.0;
      for (const auto& e : empty_scans) var += std::norm(e.channels[c][k] - mean);
      var /= static_cast<double>(empty_scans.size() - 1);
      const double amp = std::abs(spec.channels[c][k]);
      snr[c][k] = var > 0.0 ? amp / std::sqrt(var) : (amp > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
  }
  spec.snr = std::move(snr);
}

/// Zeroes the bins of channel i whose SNR is below theta[i].
inline SpectrumRecord snr_threshold(const SpectrumRecord& spec, std::array<double, 2> theta) {
  spec.validate();
  if (!spec.snr) throw ConfigError("SNR thresholding needs per-bin SNR estimates");
  SpectrumRecord out = spec;
  out.thresholds = theta;
  for (std::size_t c = 0; c < 2; ++c) {
    if (std::isnan(theta[c])) throw ConfigError("SNR threshold is NaN");
    for (std::size_t k = 0; k < out.size(); ++k)
      if ((*spec.snr)[c][k] < theta[c]) out.channels[c][k] = 0.0;
  }
  return out;
}

/// First retained folded bin index: floor(max(f_x, f_y) * n / df) + offset.
inline std::size_t highpass_cut_index(std::size_t harmonics, double fx, double fy, double df,
                                      std::size_t offset = 100) {
  if (!(df > 0.0) || !(fx >= 0.0) || !(fy >= 0.0)) throw ConfigError("high-pass needs positive frequencies");
  return static_cast<std::size_t>(std::floor(std::max(fx, fy) * static_cast<double>(harmonics) / df)) + offset;
}

/// Zeroes every bin whose folded index lies below the high-pass cut.
inline SpectrumRecord highpass_filter(const SpectrumRecord& spec, std::size_t harmonics, double fx, double fy,
                                      std::size_t offset = 100) {
  spec.validate();
  const std::size_t cut = highpass_cut_index(harmonics, fx, fy, spec.frequency_step(), offset);
  SpectrumRecord out = spec;
  if (cut > out.size() / 2) out.warnings.push_back("high-pass cut at bin " + std::to_string(cut) + " removes every bin");
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t k = 0; k < out.size(); ++k)
      if (out.folded_index(k) < cut) out.channels[c][k] = 0.0;
  return out;
}

/// Divides each channel by its AF-TF; bins with |a| < rel_eps * max|a| are
/// zeroed and counted in guarded_bins.
inline SpectrumRecord aftf_divide(const SpectrumRecord& spec, const std::array<ComplexSpectrum, 2>& aftf,
                                  double rel_eps = 1e-8) {
  spec.validate();
  SpectrumRecord out = spec;
  for (std::size_t c = 0; c < 2; ++c) {
    if (aftf[c].size() != spec.size()) throw ConfigError("AF-TF length does not match the spectrum");
    double amax = 0.0;
    for (const auto& a : aftf[c]) amax = std::max(amax, std::abs(a));
    const double eps = rel_eps * amax;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (std::abs(aftf[c][k]) < eps || amax == 0.0) {
        out.channels[c][k] = 0.0;
        ++out.guarded_bins;
      } else {
        out.channels[c][k] /= aftf[c][k];
      }
    }
  }
  return out;
}

/// Tolerance on the imaginary residual of the inverse DFT, relative to the largest sample.
inline constexpr double kImagResidualTolerance = 1e-9;

/// Inverse DFT per channel, keeping the real part. With `strict`, a relative
/// imaginary residual above 1e-9 (a spectrum that is not conjugate
/// symmetric) raises NumericalError; otherwise it is dropped silently.
inline std::vector<Vec2> to_time_domain(const SpectrumRecord& spec, bool strict = true) {
  spec.validate();
  const std::size_t L = spec.size();
  detail::ComplexFft1d fft(L);
  std::vector<Vec2> out(L);
  ComplexSpectrum buf(L);
  double max_real = 0.0, max_imag = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    fft.inverse(spec.channels[c], buf);
    for (std::size_t k = 0; k < L; ++k) {
      const auto z = buf[k] / static_cast<double>(L);
      out[k][c] = z.real();
      max_real = std::max(max_real, std::abs(z.real()));
      max_imag = std::max(max_imag, std::abs(z.imag()));
    }
  }
  if (strict && max_imag > kImagResidualTolerance * std::max(max_real, std::numeric_limits<double>::min()))
    throw NumericalError("inverse DFT has an imaginary residual; spectrum is not conjugate symmetric");
  return out;
}

/// Copy of the scan with its samples replaced (e.g. by preprocessed ones).
inline ScanRecord with_samples(const ScanRecord& scan, std::vector<Vec2> samples) {
  if (samples.size() != scan.size()) throw ConfigError("replacement samples differ in length");
  ScanRecord out = scan;
  out.samples = std::move(samples);
  return out;
}

}  // namespace mpirelax
