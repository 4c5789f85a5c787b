#pragma once

// File formats. The binary container is
//   8-byte magic "MPIRLX\0\0", u32 version, u32 kind, kind-specific header,
//   then little-endian float64 arrays.
// Scan records additionally export to CSV; scalar grids export to 16-bit PGM
// with the normalization range in a sidecar text file.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mpirelax/error.hpp"
#include "mpirelax/grid.hpp"
#include "mpirelax/preprocess.hpp"
#include "mpirelax/scan.hpp"

namespace mpirelax {

inline constexpr char kMagic[8] = {'M', 'P', 'I', 'R', 'L', 'X', '\0', '\0'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class ContainerKind : std::uint32_t { scan = 1, scalar_grid = 2, matrix_field = 3, spectrum = 4 };

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { bytes(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  void header(ContainerKind kind) {
    out_.write(kMagic, sizeof kMagic);
    u32(kFormatVersion);
    u32(static_cast<std::uint32_t>(kind));
  }

 private:
  void bytes(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(bytes(8)); }
  void f64s(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  void header(ContainerKind expected) {
    char magic[8];
    in_.read(magic, sizeof magic);
    if (!in_ || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError("not an mpirelax container");
    const auto version = u32();
    if (version != kFormatVersion) throw ConfigError("unsupported container version " + std::to_string(version));
    const auto kind = u32();
    if (kind != static_cast<std::uint32_t>(expected))
      throw ConfigError("container holds kind " + std::to_string(kind) + ", expected " +
                        std::to_string(static_cast<std::uint32_t>(expected)));
  }
  /// Guards allocations against corrupt length fields.
  std::size_t count(std::uint64_t n, std::uint64_t limit = std::uint64_t{1} << 32) {
    if (n > limit) throw ConfigError("container length field is implausible");
    return static_cast<std::size_t>(n);
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    if (!in_) throw ConfigError("truncated container");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

inline std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ConfigError("cannot read " + path);
  return in;
}

inline void write_vec2s(Writer& w, const std::vector<Vec2>& v) {
  for (const auto& x : v) w.f64s(x.data(), 2);
}

inline std::vector<Vec2> read_vec2s(Reader& r, std::size_t n) {
  std::vector<Vec2> v(n);
  for (auto& x : v) r.f64s(x.data(), 2);
  return v;
}

inline void write_geometry(Writer& w, const GridGeometry& g) {
  w.u64(g.nx);
  w.u64(g.ny);
  w.f64(g.fov.x_min);
  w.f64(g.fov.x_max);
  w.f64(g.fov.y_min);
  w.f64(g.fov.y_max);
}

inline GridGeometry read_geometry(Reader& r) {
  const auto nx = r.count(r.u64(), 1u << 16), ny = r.count(r.u64(), 1u << 16);
  Fov fov;
  fov.x_min = r.f64();
  fov.x_max = r.f64();
  fov.y_min = r.f64();
  fov.y_max = r.f64();
  return GridGeometry(nx, ny, fov);
}

}  // namespace detail

// Scan: u32 n, u64 L, f64 dt, u32 model, f64 tau, f64 calibration,
// u8 has_s0, f64[2] s0, then samples, positions, velocities.
inline void write_scan(std::ostream& out, const ScanRecord& scan) {
  scan.validate();
  detail::Writer w(out);
  w.header(ContainerKind::scan);
  w.u32(2);
  w.u64(scan.size());
  w.f64(scan.dt);
  w.u32(static_cast<std::uint32_t>(scan.model));
  w.f64(scan.tau);
  w.f64(scan.calibration);
  w.u8(scan.initial_sample ? 1 : 0);
  const Vec2 s0 = scan.initial_sample.value_or(Vec2{0.0, 0.0});
  w.f64s(s0.data(), 2);
  detail::write_vec2s(w, scan.samples);
  detail::write_vec2s(w, scan.positions);
  detail::write_vec2s(w, scan.velocities);
}

inline ScanRecord read_scan(std::istream& in) {
  detail::Reader r(in);
  r.header(ContainerKind::scan);
  if (r.u32() != 2) throw ConfigError("only two-dimensional scans are supported");
  const std::size_t L = r.count(r.u64());
  ScanRecord scan;
  scan.dt = r.f64();
  const auto model = r.u32();
  if (model > 1) throw ConfigError("unknown signal model tag");
  scan.model = static_cast<SignalModel>(model);
  scan.tau = r.f64();
  scan.calibration = r.f64();
  const bool has_s0 = r.u8() != 0;
  Vec2 s0;
  r.f64s(s0.data(), 2);
  if (has_s0) scan.initial_sample = s0;
  scan.samples = detail::read_vec2s(r, L);
  scan.positions = detail::read_vec2s(r, L);
  scan.velocities = detail::read_vec2s(r, L);
  scan.validate();
  return scan;
}

// Grids: geometry (u64 nx, u64 ny, f64[4] fov); matrix fields add u32 n.
inline void write_grid(std::ostream& out, const ScalarGrid& g) {
  detail::Writer w(out);
  w.header(ContainerKind::scalar_grid);
  detail::write_geometry(w, g.geometry());
  w.f64s(g.data().data(), g.size());
}

inline ScalarGrid read_grid(std::istream& in) {
  detail::Reader r(in);
  r.header(ContainerKind::scalar_grid);
  ScalarGrid g(detail::read_geometry(r));
  r.f64s(g.values().data(), g.size());
  return g;
}

inline void write_field(std::ostream& out, const MatrixFieldGrid& f) {
  detail::Writer w(out);
  w.header(ContainerKind::matrix_field);
  detail::write_geometry(w, f.geometry());
  w.u32(static_cast<std::uint32_t>(f.n()));
  w.f64s(f.data().data(), f.data().size());
}

inline MatrixFieldGrid read_field(std::istream& in) {
  detail::Reader r(in);
  r.header(ContainerKind::matrix_field);
  const GridGeometry g = detail::read_geometry(r);
  const auto n = r.u32();
  if (n != 2) throw ConfigError("only 2x2 matrix fields are supported");
  MatrixFieldGrid f(g, n);
  r.f64s(f.data().data(), f.data().size());
  return f;
}

// Spectrum: u64 L, f64 dt, f64[2] thresholds, u64 guarded, u8 has_snr,
// channels as (re, im) pairs, then the SNR tables when present.
inline void write_spectrum(std::ostream& out, const SpectrumRecord& spec) {
  spec.validate();
  detail::Writer w(out);
  w.header(ContainerKind::spectrum);
  w.u64(spec.size());
  w.f64(spec.dt);
  w.f64s(spec.thresholds.data(), 2);
  w.u64(spec.guarded_bins);
  w.u8(spec.snr ? 1 : 0);
  for (const auto& ch : spec.channels)
    for (const auto& z : ch) {
      w.f64(z.real());
      w.f64(z.imag());
    }
  if (spec.snr)
    for (const auto& ch : *spec.snr) w.f64s(ch.data(), ch.size());
}

inline SpectrumRecord read_spectrum(std::istream& in) {
  detail::Reader r(in);
  r.header(ContainerKind::spectrum);
  const std::size_t L = r.count(r.u64());
  SpectrumRecord spec;
  spec.dt = r.f64();
  r.f64s(spec.thresholds.data(), 2);
  spec.guarded_bins = r.count(r.u64(), ~std::uint64_t{0});
  const bool has_snr = r.u8() != 0;
  for (auto& ch : spec.channels) {
    ch.resize(L);
    for (auto& z : ch) {
      const double re = r.f64();
      z = {re, r.f64()};
    }
  }
  if (has_snr) {
    std::array<std::vector<double>, 2> snr;
    for (auto& ch : snr) {
      ch.resize(L);
      r.f64s(ch.data(), L);
    }
    spec.snr = std::move(snr);
  }
  spec.validate();
  return spec;
}

template <typename T, typename F>
void save(const std::string& path, const T& value, F writer) {
  auto out = detail::open_out(path, true);
  writer(out, value);
  if (!out) throw ConfigError("failed writing " + path);
}

inline void save_scan(const std::string& path, const ScanRecord& s) { save(path, s, [](auto& o, auto& v) { write_scan(o, v); }); }
inline void save_grid(const std::string& path, const ScalarGrid& g) { save(path, g, [](auto& o, auto& v) { write_grid(o, v); }); }
inline void save_field(const std::string& path, const MatrixFieldGrid& f) {
  save(path, f, [](auto& o, auto& v) { write_field(o, v); });
}
inline void save_spectrum(const std::string& path, const SpectrumRecord& s) {
  save(path, s, [](auto& o, auto& v) { write_spectrum(o, v); });
}

inline ScanRecord load_scan(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_scan(in);
}
inline ScalarGrid load_grid(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_grid(in);
}
inline MatrixFieldGrid load_field(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_field(in);
}
inline SpectrumRecord load_spectrum(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_spectrum(in);
}

/// Formats a double so that it parses back to the same value.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One row per t_k = k dt: t, s_x, s_y, r_x, r_y, v_x, v_y.
inline void write_scan_csv(std::ostream& out, const ScanRecord& scan) {
  scan.validate();
  out << "t,s_x,s_y,r_x,r_y,v_x,v_y\n";
  for (std::size_t k = 0; k < scan.size(); ++k) {
    out << format_double(static_cast<double>(k + 1) * scan.dt);
    for (const Vec2* v : {&scan.samples[k], &scan.positions[k], &scan.velocities[k]})
      out << ',' << format_double((*v)[0]) << ',' << format_double((*v)[1]);
    out << '\n';
  }
}

/// 16-bit binary PGM (P5, most significant byte first). Negative values are
/// clipped, the rest is mapped linearly from [min, max] to [0, 65535]. Rows
/// run from y_max down to y_min so the image is upright. The range goes to
/// `path + ".range"` as "min <value>" and "max <value>" lines.
inline void save_pgm(const std::string& path, const ScalarGrid& g) {
  std::vector<double> v(g.data().begin(), g.data().end());
  for (auto& x : v) x = std::max(x, 0.0);
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
  auto out = detail::open_out(path, true);
  out << "P5\n" << g.nx() << ' ' << g.ny() << "\n65535\n";
  for (std::size_t row = 0; row < g.ny(); ++row) {
    const std::size_t j = g.ny() - 1 - row;
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const auto q = static_cast<std::uint16_t>(std::lround((v[g.geometry().index(i, j)] - lo) * scale));
      out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    }
  }
  if (!out) throw ConfigError("failed writing " + path);
  auto side = detail::open_out(path + ".range", false);
  side << "min " << format_double(lo) << "\nmax " << format_double(hi) << '\n';
}

/// Reads the 16-bit PGM written by save_pgm back as normalized values in [0, 1].
inline std::vector<double> load_pgm_normalized(const std::string& path, std::size_t& width, std::size_t& height) {
  auto in = detail::open_in(path, true);
  std::string magic;
  unsigned maxval = 0;
  in >> magic >> width >> height >> maxval;
  in.get();
  if (!in || magic != "P5" || maxval != 65535) throw ConfigError("not a 16-bit PGM: " + path);
  std::vector<double> v(width * height);
  for (auto& x : v) {
    const int hi = in.get(), lo = in.get();
    if (!in) throw ConfigError("truncated PGM: " + path);
    x = static_cast<double>((hi << 8) | lo) / 65535.0;
  }
  return v;
}

/// AF-TF of one channel: one "real,imag" row per frequency bin; blank lines
/// and '#' comments are skipped.
inline ComplexSpectrum read_aftf_csv(std::istream& in) {
  ComplexSpectrum out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    std::string rest;
    if (!(ls >> re >> im) || (ls >> rest)) throw ConfigError("AF-TF line " + std::to_string(lineno) + ": expected real,imag");
    out.emplace_back(re, im);
  }
  return out;
}

inline ComplexSpectrum load_aftf_csv(const std::string& path) {
  auto in = detail::open_in(path, false);
  return read_aftf_csv(in);
}

inline void write_aftf_csv(std::ostream& out, const ComplexSpectrum& a) {
  for (const auto& z : a) out << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
}

}  // namespace mpirelax
