#pragma once

// Manifest format: line-oriented "key = value" pairs grouped under [section]
// headers; '#' starts a comment. Numbers accept scientific notation and
// fractions such as 2.5e6/102. Lists are comma separated; the list item
// decades(j0, j1) expands to i * 10^j for j = j0..j1, i = 1..9.
// Relative paths are resolved against the manifest's directory.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpirelax/core_stage.hpp"
#include "mpirelax/deconv.hpp"
#include "mpirelax/error.hpp"
#include "mpirelax/grid.hpp"
#include "mpirelax/physics.hpp"
#include "mpirelax/simulate.hpp"

namespace mpirelax {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_plain_number(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf") return HUGE_VAL;
  if (t == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError(what + ": '" + s + "' is not a number");
  return v;
}

}  // namespace detail

/// Parses "x" or "a/b".
inline double parse_number(const std::string& s, const std::string& what = "value") {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return detail::parse_plain_number(s, what);
  const double den = detail::parse_plain_number(s.substr(slash + 1), what);
  if (den == 0.0) throw ConfigError(what + ": division by zero in '" + s + "'");
  return detail::parse_plain_number(s.substr(0, slash), what) / den;
}

/// Comma-separated numbers; decades(j0, j1) expands to {i * 10^j}.
inline std::vector<double> parse_number_list(const std::string& s, const std::string& what = "list") {
  std::vector<double> out;
  for (const auto& item : detail::split(s, ',')) {
    if (item.rfind("decades(", 0) == 0 && item.back() == ')') {
      const auto args = detail::split(item.substr(8, item.size() - 9), ',');
      if (args.size() != 2) throw ConfigError(what + ": decades() takes two exponents");
      const double j0 = parse_number(args[0], what), j1 = parse_number(args[1], what);
      if (j0 != std::floor(j0) || j1 != std::floor(j1) || j1 < j0) throw ConfigError(what + ": bad decades() range");
      for (int j = static_cast<int>(j0); j <= static_cast<int>(j1); ++j)
        for (int i = 1; i <= 9; ++i) out.push_back(std::stod(std::to_string(i) + "e" + std::to_string(j)));
    } else {
      out.push_back(parse_number(item, what));
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

/// Flat "section.key" -> value map with typed accessors. Keys that are never
/// read are reported by check_all_used so that typos do not pass silently.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin = "config") {
    ConfigFile cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
      const std::string key = (section.empty() ? "" : section + ".") + detail::trim(line.substr(0, eq));
      if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key " + key);
      cfg.values_[key] = detail::trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path);
    auto cfg = parse(in, path);
    cfg.base_ = std::filesystem::path(path).parent_path();
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }
  std::string required(const std::string& key) const {
    if (!has(key)) throw ConfigError("manifest is missing " + key);
    return raw(key);
  }
  double number(const std::string& key, double fallback) const { return has(key) ? parse_number(raw(key), key) : fallback; }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const double v = parse_number(raw(key), key);
    if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ConfigError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + " must be true or false");
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? parse_number_list(raw(key), key) : fallback;
  }
  std::vector<std::string> strings(const std::string& key) const {
    if (!has(key)) return {};
    return detail::split(raw(key), ',');
  }
  std::string path(const std::string& p) const {
    const std::filesystem::path q(p);
    return q.is_absolute() || base_.empty() ? q.string() : (base_ / q).string();
  }

  void check_all_used() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError("unknown manifest key " + k);
  }

 private:
  const std::string& raw(const std::string& key) const {
    used_.insert(key);
    return values_.at(key);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::filesystem::path base_;
};

struct TrajectoryParams {
  double amplitude_x = 0.012;
  double amplitude_y = 0.012;
  double frequency_x = 2.5e6 / 102.0;
  double frequency_y = 2.5e6 / 96.0;
  double dt = 4e-7;
  std::size_t samples = 1632;

  Trajectory build() const {
    return lissajous_trajectory(amplitude_x, amplitude_y, frequency_x, frequency_y, dt, samples);
  }
};

struct ExperimentManifest {
  std::string name = "experiment";
  std::vector<std::string> phantoms;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool write_images = true;

  Fov fov{-0.012, 0.012, -0.012, 0.012};
  std::size_t nx = 32, ny = 32;
  /// Grid on which the ground truth is simulated (finer than the reconstruction grid).
  std::size_t sim_nx = 64, sim_ny = 64;

  TrajectoryParams trajectory;
  PhysicalParams physics;

  double tau_gt = 5e-6;
  double snr_db = 40.0;
  NoisePower noise_power = NoisePower::per_channel;

  std::vector<double> taus{5e-6};
  std::vector<double> gammas{7e-7};
  std::vector<double> nu0s{1e-7};

  CoreStageConfig core;
  DeconvConfig deconv;
  std::string denoiser = "tikhonov";

  GridGeometry grid() const { return GridGeometry(nx, ny, fov); }
  GridGeometry sim_grid() const { return GridGeometry(sim_nx, sim_ny, fov); }

  /// Sweeps need phantoms; single-stage commands only use the physical setup.
  void validate(bool require_phantoms = true) const {
    if (require_phantoms && phantoms.empty()) throw ConfigError("manifest lists no phantoms");
    for (const auto& p : phantoms)
      if (!std::filesystem::exists(p)) throw ConfigError("phantom file not found: " + p);
    if (taus.empty() || gammas.empty() || nu0s.empty()) throw ConfigError("sweep lists must be non-empty");
    for (double t : taus)
      if (!(t >= 0.0)) throw ConfigError("tau values must be non-negative");
    for (double g : gammas)
      if (!(g >= 0.0)) throw ConfigError("gamma values must be non-negative");
    for (double n : nu0s)
      if (!(n > 0.0)) throw ConfigError("nu0 values must be positive");
    if (!(tau_gt >= 0.0)) throw ConfigError("simulation tau must be non-negative");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (denoiser != "tikhonov" && denoiser != "identity") throw ConfigError("unknown denoiser " + denoiser);
    (void)grid();
    (void)sim_grid();
    physics.validate();
    core.validate();
    deconv.validate();
  }
};

inline std::array<double, 4> parse_matrix(const std::string& s, const std::string& what) {
  const auto v = parse_number_list(s, what);
  if (v.size() != 4) throw ConfigError(what + " needs four entries (row-major 2x2)");
  return {v[0], v[1], v[2], v[3]};
}

inline ExperimentManifest manifest_from_config(const ConfigFile& c, bool require_phantoms = true) {
  ExperimentManifest m;
  m.name = c.string("experiment.name", m.name);
  for (const auto& p : c.strings("experiment.phantoms")) m.phantoms.push_back(c.path(p));
  m.output_dir = c.path(c.string("experiment.output_dir", m.output_dir));
  m.seed = c.count("experiment.seed", m.seed);
  m.workers = c.count("experiment.workers", m.workers);
  m.write_images = c.flag("experiment.images", m.write_images);

  if (c.has("grid.fov")) {
    const auto f = parse_number_list(c.required("grid.fov"), "grid.fov");
    if (f.size() != 4) throw ConfigError("grid.fov needs x_min, x_max, y_min, y_max");
    m.fov = {f[0], f[1], f[2], f[3]};
  }
  m.nx = c.count("grid.nx", m.nx);
  m.ny = c.count("grid.ny", m.ny);
  m.sim_nx = c.count("grid.sim_nx", m.sim_nx);
  m.sim_ny = c.count("grid.sim_ny", m.sim_ny);

  auto& t = m.trajectory;
  t.amplitude_x = c.number("trajectory.amplitude_x", t.amplitude_x);
  t.amplitude_y = c.number("trajectory.amplitude_y", t.amplitude_y);
  t.frequency_x = c.number("trajectory.frequency_x", t.frequency_x);
  t.frequency_y = c.number("trajectory.frequency_y", t.frequency_y);
  t.dt = c.number("trajectory.dt", t.dt);
  t.samples = c.count("trajectory.samples", t.samples);

  auto& p = m.physics;
  p.mu0 = c.number("physics.mu0", p.mu0);
  p.boltzmann = c.number("physics.boltzmann", p.boltzmann);
  p.temperature = c.number("physics.temperature", p.temperature);
  p.saturation_magnetization = c.number("physics.saturation_magnetization", p.saturation_magnetization);
  p.diameter = c.number("physics.diameter", p.diameter);
  p.moment = c.number("physics.moment", p.moment);
  if (c.has("physics.gradient")) p.gradient = parse_matrix(c.required("physics.gradient"), "physics.gradient");
  if (c.has("physics.coil_sensitivity"))
    p.coil_sensitivity = parse_matrix(c.required("physics.coil_sensitivity"), "physics.coil_sensitivity");

  m.tau_gt = c.number("simulation.tau", m.tau_gt);
  m.snr_db = c.number("simulation.snr_db", m.snr_db);
  const auto np = c.string("simulation.noise_power", "per_channel");
  if (np == "per_channel") m.noise_power = NoisePower::per_channel;
  else if (np == "global") m.noise_power = NoisePower::global;
  else throw ConfigError("simulation.noise_power must be per_channel or global");

  m.taus = c.numbers("sweep.tau", m.taus);
  m.gammas = c.numbers("sweep.gamma", m.gammas);
  m.nu0s = c.numbers("sweep.nu0", m.nu0s);

  m.core.cg_max_iterations = c.count("core.cg_max_iters", m.core.cg_max_iterations);
  m.core.cg_tolerance = c.number("core.cg_tol", m.core.cg_tolerance);

  auto& d = m.deconv;
  d.iterations = c.count("deconv.n_it", d.iterations);
  d.cg_max_iterations = c.count("deconv.cg_max_iters", d.cg_max_iterations);
  d.cg_tolerance = c.number("deconv.cg_tol", d.cg_tolerance);
  d.padding_pct = c.number("deconv.pad_pct", d.padding_pct);
  d.cut_pct = c.number("deconv.cut_pct", d.cut_pct);
  d.mask_padding = c.flag("deconv.mask_padding", d.mask_padding);
  if (c.has("deconv.beta")) d.beta = parse_matrix(c.required("deconv.beta"), "deconv.beta");
  m.denoiser = c.string("deconv.denoiser", m.denoiser);

  c.check_all_used();
  m.core.geometry = m.grid();
  m.deconv.nu0 = m.nu0s.front();
  m.core.gamma = m.gammas.front();
  m.validate(require_phantoms);
  return m;
}

inline ExperimentManifest load_manifest(const std::string& path, bool require_phantoms = true) {
  return manifest_from_config(ConfigFile::load(path), require_phantoms);
}

}  // namespace mpirelax
