#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpirelax/config.hpp"
#include "mpirelax/io.hpp"
#include "test_util.hpp"

using namespace mpirelax;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mpirelax_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ScanRecord sample_scan() {
  ScanRecord s;
  s.dt = 4e-7;
  s.model = SignalModel::debye;
  s.tau = 3e-6;
  s.calibration = -1.25e-18;
  s.initial_sample = Vec2{0.1, -0.2};
  const auto v = testutil::random_vector(6 * 11, 3);
  for (std::size_t k = 0; k < 11; ++k) {
    s.samples.push_back({v[6 * k], v[6 * k + 1]});
    s.positions.push_back({v[6 * k + 2], v[6 * k + 3]});
    s.velocities.push_back({v[6 * k + 4], v[6 * k + 5]});
  }
  return s;
}

ConfigFile parse(const std::string& text) {
  std::istringstream in(text);
  return ConfigFile::parse(in);
}

}  // namespace

TEST(BinaryIo, ScanRoundTripIsBitExact) {
  const auto s = sample_scan();
  std::stringstream buf;
  write_scan(buf, s);
  const auto r = read_scan(buf);
  EXPECT_EQ(r.samples, s.samples);
  EXPECT_EQ(r.positions, s.positions);
  EXPECT_EQ(r.velocities, s.velocities);
  EXPECT_EQ(r.dt, s.dt);
  EXPECT_EQ(r.model, s.model);
  EXPECT_EQ(r.tau, s.tau);
  EXPECT_EQ(r.calibration, s.calibration);
  ASSERT_TRUE(r.initial_sample.has_value());
  EXPECT_EQ(*r.initial_sample, *s.initial_sample);
}

TEST(BinaryIo, HeaderLayout) {
  std::stringstream buf;
  write_grid(buf, testutil::random_grid(testutil::square_grid(3), 1));
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "MPIRLX\0\0", 8), 0);
  EXPECT_EQ(bytes[8], 1);  // version, little endian
  EXPECT_EQ(bytes[9], 0);
  EXPECT_EQ(bytes[12], 2);  // scalar grid
}

TEST(BinaryIo, GridAndFieldRoundTrip) {
  const GridGeometry g(5, 7, Fov{-0.01, 0.02, -0.003, 0.004});
  const auto grid = testutil::random_grid(g, 2);
  std::stringstream a;
  write_grid(a, grid);
  const auto gr = read_grid(a);
  EXPECT_EQ(gr.geometry(), g);
  EXPECT_EQ(gr.data(), grid.data());

  MatrixFieldGrid f(g, 2);
  const auto v = testutil::random_vector(f.data().size(), 4);
  std::copy(v.begin(), v.end(), f.data().begin());
  std::stringstream b;
  write_field(b, f);
  const auto fr = read_field(b);
  EXPECT_EQ(fr.geometry(), g);
  EXPECT_EQ(fr.data(), f.data());
}

TEST(BinaryIo, SpectrumRoundTrip) {
  SpectrumRecord s;
  s.dt = 1e-6;
  s.channels = {ComplexSpectrum{{1, 2}, {3, -4}}, ComplexSpectrum{{0, 0}, {-1e-300, 5}}};
  s.snr = std::array<std::vector<double>, 2>{std::vector<double>{1, 2}, std::vector<double>{3, 4}};
  s.thresholds = {1.5, 2.5};
  s.guarded_bins = 3;
  std::stringstream buf;
  write_spectrum(buf, s);
  const auto r = read_spectrum(buf);
  EXPECT_EQ(r.dt, s.dt);
  EXPECT_EQ(r.channels, s.channels);
  ASSERT_TRUE(r.snr.has_value());
  EXPECT_EQ(*r.snr, *s.snr);
  EXPECT_EQ(r.thresholds, s.thresholds);
  EXPECT_EQ(r.guarded_bins, s.guarded_bins);
}

TEST(BinaryIo, RejectsWrongKindAndTruncation) {
  std::stringstream buf;
  write_grid(buf, testutil::random_grid(testutil::square_grid(3), 1));
  const std::string bytes = buf.str();
  std::stringstream wrong(bytes);
  EXPECT_THROW(read_scan(wrong), ConfigError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_grid(cut), ConfigError);
  std::stringstream garbage("not a container at all");
  EXPECT_THROW(read_grid(garbage), ConfigError);
}

TEST(BinaryIo, FileHelpers) {
  const auto d = temp_dir("files");
  const auto s = sample_scan();
  save_scan((d / "a.scan").string(), s);
  EXPECT_EQ(load_scan((d / "a.scan").string()).samples, s.samples);
  EXPECT_THROW(load_scan((d / "missing.scan").string()), ConfigError);
}

TEST(CsvIo, ScanCsvHasHeaderAndExactValues) {
  const auto s = sample_scan();
  std::stringstream out;
  write_scan_csv(out, s);
  std::string line;
  std::getline(out, line);
  EXPECT_EQ(line, "t,s_x,s_y,r_x,r_y,v_x,v_y");
  std::size_t rows = 0;
  while (std::getline(out, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 7u);
    EXPECT_EQ(v[0], static_cast<double>(rows + 1) * s.dt);
    EXPECT_EQ(v[1], s.samples[rows][0]);
    EXPECT_EQ(v[6], s.velocities[rows][1]);
    ++rows;
  }
  EXPECT_EQ(rows, s.size());
}

TEST(CsvIo, AftfRoundTripAndErrors) {
  const ComplexSpectrum a{{1.0, -0.5}, {1e-12, 3.0}, {0.25, 0.0}};
  std::stringstream out;
  write_aftf_csv(out, a);
  std::istringstream in("# header\n" + out.str() + "\n");
  EXPECT_EQ(read_aftf_csv(in), a);
  std::istringstream bad("1.0\n");
  EXPECT_THROW(read_aftf_csv(bad), ConfigError);
}

TEST(PgmIo, UprightScaledAndSidecar) {
  const auto d = temp_dir("pgm");
  const GridGeometry g(3, 2, Fov{0, 3, 0, 2});
  ScalarGrid img(g);
  img(0, 0) = -1.0;  // clipped to 0
  img(2, 1) = 4.0;
  img(1, 0) = 2.0;
  const auto path = (d / "img.pgm").string();
  save_pgm(path, img);
  std::size_t w = 0, h = 0;
  const auto v = load_pgm_normalized(path, w, h);
  ASSERT_EQ(w, 3u);
  ASSERT_EQ(h, 2u);
  // First row is y = y_max.
  EXPECT_DOUBLE_EQ(v[2], 1.0);
  EXPECT_NEAR(v[3 + 1], 0.5, 1e-4);
  EXPECT_DOUBLE_EQ(v[3 + 0], 0.0);
  std::ifstream side(path + ".range");
  std::string k1, k2;
  double lo = -1, hi = -1;
  side >> k1 >> lo >> k2 >> hi;
  EXPECT_EQ(k1, "min");
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(k2, "max");
  EXPECT_EQ(hi, 4.0);
}

TEST(ConfigParse, Numbers) {
  EXPECT_DOUBLE_EQ(parse_number("2.5e6/102"), 2.5e6 / 102);
  EXPECT_DOUBLE_EQ(parse_number(" 4e-7 "), 4e-7);
  EXPECT_TRUE(std::isinf(parse_number("inf")));
  EXPECT_THROW(parse_number("1/0"), ConfigError);
  EXPECT_THROW(parse_number("abc"), ConfigError);
  EXPECT_THROW(parse_number("1.0x"), ConfigError);
}

TEST(ConfigParse, DecadesExpandToExactDecimalValues) {
  const auto v = parse_number_list("0, decades(-7,-5)");
  ASSERT_EQ(v.size(), 28u);
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 1e-7);
  EXPECT_EQ(v[5], 5e-7);
  EXPECT_EQ(v[10], 1e-6);
  EXPECT_EQ(v[14], 5e-6);
  EXPECT_EQ(v[27], 9e-5);
  EXPECT_THROW(parse_number_list("decades(-5,-7)"), ConfigError);
  EXPECT_THROW(parse_number_list("decades(1)"), ConfigError);
}

TEST(ConfigParse, SectionsCommentsAndErrors) {
  const auto c = parse("top = 1\n[a] # comment\nx = 2 # trailing\n\n[b]\ny=  hello world \n");
  EXPECT_EQ(c.number("top", 0), 1.0);
  EXPECT_EQ(c.number("a.x", 0), 2.0);
  EXPECT_EQ(c.string("b.y", ""), "hello world");
  EXPECT_THROW(parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(parse("[a\n"), ConfigError);
  EXPECT_THROW(parse("novalue\n"), ConfigError);
}

TEST(ConfigParse, FlagsAndCounts) {
  const auto c = parse("a = yes\nb = 0\nc = 12\nd = 1.5\ne = maybe\n");
  EXPECT_TRUE(c.flag("a", false));
  EXPECT_FALSE(c.flag("b", true));
  EXPECT_EQ(c.count("c", 0), 12u);
  EXPECT_THROW(c.count("d", 0), ConfigError);
  EXPECT_THROW(c.flag("e", false), ConfigError);
}

TEST(Manifest, DefaultsWithoutPhantoms) {
  const auto m = manifest_from_config(parse(""), false);
  EXPECT_EQ(m.nx, 32u);
  EXPECT_EQ(m.trajectory.samples, 1632u);
  EXPECT_EQ(m.deconv.iterations, 10u);
  EXPECT_EQ(m.nu0s.front(), 1e-7);
  EXPECT_THROW(manifest_from_config(parse("")), ConfigError);
}

TEST(Manifest, UnknownKeyIsRejected) {
  EXPECT_THROW(manifest_from_config(parse("[sweep]\ntaus = 1e-6\n"), false), ConfigError);
  EXPECT_THROW(manifest_from_config(parse("[deconv]\ndenoiser = bm3d\n"), false), ConfigError);
  EXPECT_THROW(manifest_from_config(parse("[deconv]\nbeta = 1, 0.5, 0, 1\n"), false), ConfigError);
  EXPECT_THROW(manifest_from_config(parse("[sweep]\nnu0 = 0\n"), false), ConfigError);
}

TEST(Manifest, PathsResolveRelativeToManifest) {
  const auto d = temp_dir("manifest");
  fs::create_directories(d / "ph");
  std::ofstream(d / "ph" / "one.txt") << "disc 0 0 0.003 1\n";
  std::ofstream(d / "m.ini") << "[experiment]\nname = t\nphantoms = ph/one.txt\noutput_dir = res\nworkers = 3\n"
                                "[grid]\nnx = 24\nny = 20\n[sweep]\ntau = 0, 1e-6\ngamma = 1e-6\nnu0 = 1e-7, 1e-8\n"
                                "[physics]\ngradient = -2, 0, 0, -1\n[deconv]\nn_it = 4\nbeta = 1, 0, 0, 1\n";
  const auto m = load_manifest((d / "m.ini").string());
  ASSERT_EQ(m.phantoms.size(), 1u);
  EXPECT_EQ(fs::path(m.phantoms[0]), d / "ph" / "one.txt");
  EXPECT_EQ(fs::path(m.output_dir), d / "res");
  EXPECT_EQ(m.workers, 3u);
  EXPECT_EQ(m.grid().nx, 24u);
  EXPECT_EQ(m.grid().ny, 20u);
  EXPECT_EQ(m.taus, (std::vector<double>{0.0, 1e-6}));
  EXPECT_EQ(m.nu0s.size(), 2u);
  EXPECT_EQ(m.physics.gradient[0], -2.0);
  EXPECT_EQ(m.deconv.iterations, 4u);
  EXPECT_EQ(m.deconv.beta[1], 0.0);
  EXPECT_EQ(m.core.gamma, 1e-6);
}

TEST(Manifest, MissingPhantomFile) {
  const auto d = temp_dir("missing");
  std::ofstream(d / "m.ini") << "[experiment]\nphantoms = nowhere.txt\n";
  EXPECT_THROW(load_manifest((d / "m.ini").string()), ConfigError);
}

TEST(Manifest, ShippedConfigsLoad) {
  for (const char* rel : {"configs/demo.ini", "configs/relaxation_sweep.ini"}) {
    const auto m = load_manifest(testutil::source_path(rel));
    EXPECT_GE(m.phantoms.size(), 2u) << rel;
  }
}
