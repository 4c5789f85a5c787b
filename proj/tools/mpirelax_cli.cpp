// mpirelax command-line front end.
//
//   simulate  phantom -> relaxed noisy scan (+ ground truth grid)
//   adapt     relaxation adaption of a scan
//   core      core-stage reconstruction of A from an adiabatic scan
//   deconv    HQS deconvolution of A
//   metrics   PSNR / SSIM of two scalar grids
//   pipeline  one (tau, gamma, nu0) combination from a manifest
//   sweep     the full sweep of a manifest
//
// Exit status: 0 success, 2 configuration or domain error, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpirelax/mpirelax.hpp"

using namespace mpirelax;

namespace {

ExperimentManifest base_manifest(const std::string& path) {
  if (path.empty()) {
    ExperimentManifest m;
    m.core.geometry = m.grid();
    return m;
  }
  return load_manifest(path, false);
}

void print_summary(const PipelineResult& res) {
  for (const auto& r : res.summary) {
    if (r.kind == "mean") continue;
    std::printf("%s: tau=%s gamma=%s nu0=%s psnr_rho=%s ssim_rho=%s\n", r.kind.c_str(), format_param(r.tau).c_str(),
                format_param(r.gamma).c_str(), format_param(r.nu0).c_str(), format_metric(r.psnr_rho).c_str(),
                format_metric(r.ssim_rho).c_str());
  }
  std::size_t failed = 0;
  for (const auto& r : res.runs)
    if (!r.ok()) {
      ++failed;
      std::fprintf(stderr, "run %s tau=%s gamma=%s nu0=%s failed: %s\n", r.phantom.c_str(), format_param(r.tau).c_str(),
                   format_param(r.gamma).c_str(), format_param(r.nu0).c_str(), r.status.c_str());
    }
  if (failed) std::fprintf(stderr, "%zu of %zu runs failed\n", failed, res.runs.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxation-aware MPI simulation and reconstruction"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Manifest with physical, trajectory and solver settings")
      ->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a relaxed, noisy scan of a phantom");
  std::string sim_phantom, sim_out, sim_csv, sim_truth;
  std::optional<double> sim_tau, sim_snr;
  std::optional<std::uint64_t> sim_seed;
  std::vector<std::size_t> sim_grid;
  sim->add_option("--phantom", sim_phantom, "Phantom description file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output scan container")->required();
  sim->add_option("--csv", sim_csv, "Also export the scan as CSV");
  sim->add_option("--truth", sim_truth, "Write the ground truth on the reconstruction grid");
  sim->add_option("--tau", sim_tau, "Relaxation time of the simulated particles (s); 0 = adiabatic");
  sim->add_option("--snr-db", sim_snr, "Noise level in dB; inf disables noise");
  sim->add_option("--seed", sim_seed, "Noise seed");
  sim->add_option("--grid", sim_grid, "Simulation grid NX NY")->expected(2);

  // adapt
  auto* adapt = app.add_subcommand("adapt", "Relaxation adaption of a scan");
  std::string ad_in, ad_out;
  double tau_x = 0.0, tau_y = 0.0;
  adapt->add_option("--in", ad_in)->required()->check(CLI::ExistingFile);
  adapt->add_option("--out", ad_out)->required();
  adapt->add_option("--tau-x", tau_x, "Relaxation time of the x channel (s)")->required();
  adapt->add_option("--tau-y", tau_y, "Relaxation time of the y channel (s); defaults to --tau-x");

  // core
  auto* core = app.add_subcommand("core", "Reconstruct the core response A");
  std::string co_in, co_out, co_trace;
  std::optional<double> co_gamma, co_tol;
  std::optional<std::size_t> co_iters;
  std::vector<std::size_t> co_grid;
  core->add_option("--in", co_in)->required()->check(CLI::ExistingFile);
  core->add_option("--out", co_out)->required();
  core->add_option("--gamma", co_gamma);
  core->add_option("--cg-max-iters", co_iters);
  core->add_option("--cg-tol", co_tol);
  core->add_option("--grid", co_grid, "Reconstruction grid NX NY")->expected(2);
  core->add_option("--trace-pgm", co_trace, "Export tr(A) as PGM");

  // deconv
  auto* dec = app.add_subcommand("deconv", "Deconvolve a core response to a concentration");
  std::string de_in, de_out, de_pgm, de_denoiser;
  std::optional<double> de_nu0, de_pad, de_cut;
  std::optional<std::size_t> de_nit;
  std::vector<double> de_beta;
  dec->add_option("--in", de_in)->required()->check(CLI::ExistingFile);
  dec->add_option("--out", de_out)->required();
  dec->add_option("--nu0", de_nu0);
  dec->add_option("--n-it", de_nit);
  dec->add_option("--beta", de_beta, "Channel weights 11,12,21,22")->delimiter(',')->expected(4);
  dec->add_option("--pad-pct", de_pad);
  dec->add_option("--cut-pct", de_cut);
  dec->add_option("--denoiser", de_denoiser)->check(CLI::IsMember({"tikhonov", "identity"}));
  dec->add_option("--pgm", de_pgm, "Export the result as PGM");

  // metrics
  auto* met = app.add_subcommand("metrics", "PSNR and SSIM of a grid against a reference");
  std::string me_x, me_ref;
  met->add_option("--x", me_x)->required()->check(CLI::ExistingFile);
  met->add_option("--ref", me_ref)->required()->check(CLI::ExistingFile);

  // pipeline / sweep
  auto* pipe = app.add_subcommand("pipeline", "Run one parameter combination of a manifest");
  auto* sweep = app.add_subcommand("sweep", "Run every parameter combination of a manifest");
  std::optional<double> pi_tau, pi_gamma, pi_nu0;
  std::optional<std::size_t> workers;
  std::string out_dir;
  pipe->add_option("--tau", pi_tau, "Relaxation adaption parameter (s)");
  pipe->add_option("--gamma", pi_gamma);
  pipe->add_option("--nu0", pi_nu0);
  for (auto* s : {pipe, sweep}) {
    s->add_option("--out-dir", out_dir, "Override the manifest's output directory");
    s->add_option("--workers", workers, "Worker threads");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (pipe->parsed() || sweep->parsed()) {
      if (manifest_path.empty()) throw ConfigError("pipeline and sweep need --manifest");
      ExperimentManifest m = load_manifest(manifest_path);
      if (!out_dir.empty()) m.output_dir = out_dir;
      if (workers) m.workers = *workers;
      if (pipe->parsed()) {
        if (pi_tau) m.taus = {*pi_tau};
        if (pi_gamma) m.gammas = {*pi_gamma};
        if (pi_nu0) m.nu0s = {*pi_nu0};
        if (m.taus.size() != 1 || m.gammas.size() != 1 || m.nu0s.size() != 1)
          throw ConfigError("pipeline runs a single combination; pass --tau/--gamma/--nu0 or use sweep");
      }
      PipelineOptions opt;
      opt.progress = [](std::size_t done, std::size_t total) { std::fprintf(stderr, "\r%zu/%zu jobs", done, total); };
      const auto res = run_pipeline(m, opt);
      std::fprintf(stderr, "\n");
      print_summary(res);
      std::printf("wrote %s/metrics.csv and %s/summary.csv\n", m.output_dir.c_str(), m.output_dir.c_str());
      return 0;
    }

    ExperimentManifest m = base_manifest(manifest_path);

    if (sim->parsed()) {
      if (sim_tau) m.tau_gt = *sim_tau;
      if (sim_snr) m.snr_db = *sim_snr;
      if (sim_seed) m.seed = *sim_seed;
      if (!sim_grid.empty()) {
        m.sim_nx = sim_grid[0];
        m.sim_ny = sim_grid[1];
      }
      m.phantoms = {sim_phantom};
      const PhantomCase pc = prepare_case(m, 0);
      save_scan(sim_out, pc.measured);
      if (!sim_csv.empty()) {
        auto out = detail::open_out(sim_csv, false);
        write_scan_csv(out, pc.measured);
      }
      if (!sim_truth.empty()) save_grid(sim_truth, pc.truth);
      std::printf("simulated %zu samples of %s (tau=%s, snr=%s dB)\n", pc.measured.size(), pc.name.c_str(),
                  format_param(m.tau_gt).c_str(), format_param(m.snr_db).c_str());
    } else if (adapt->parsed()) {
      const ScanRecord scan = load_scan(ad_in);
      const double ty = adapt->count("--tau-y") ? tau_y : tau_x;
      save_scan(ad_out, relaxation_adaption(scan, RelaxationParams{{tau_x, ty}, scan.dt}));
    } else if (core->parsed()) {
      const ScanRecord scan = load_scan(co_in);
      CoreStageConfig cc = m.core;
      if (co_gamma) cc.gamma = *co_gamma;
      if (co_iters) cc.cg_max_iterations = *co_iters;
      if (co_tol) cc.cg_tolerance = *co_tol;
      if (!co_grid.empty()) cc.geometry = GridGeometry(co_grid[0], co_grid[1], m.fov);
      const auto res = core_stage_solve(scan, cc, m.physics);
      save_field(co_out, res.field);
      if (!co_trace.empty()) save_pgm(co_trace, trace_of(res.field));
      std::printf("core stage: %zu CG iterations, relative residual %.3e%s\n", res.report.iterations,
                  res.report.relative_residual, res.report.converged ? "" : " (not converged)");
      if (res.report.outside_samples)
        std::fprintf(stderr, "warning: %zu trajectory samples outside the FOV were clamped\n",
                     res.report.outside_samples);
    } else if (dec->parsed()) {
      const MatrixFieldGrid field = load_field(de_in);
      DeconvConfig dc = m.deconv;
      if (de_nu0) dc.nu0 = *de_nu0;
      if (de_nit) dc.iterations = *de_nit;
      if (de_pad) dc.padding_pct = *de_pad;
      if (de_cut) dc.cut_pct = *de_cut;
      if (!de_beta.empty()) dc.beta = {de_beta[0], de_beta[1], de_beta[2], de_beta[3]};
      const auto res = hqs_deconvolve(field, m.physics.h_sat(), m.physics, dc,
                                      select_denoiser(de_denoiser.empty() ? m.denoiser : de_denoiser));
      save_grid(de_out, res.rho);
      if (!de_pgm.empty()) save_pgm(de_pgm, res.rho);
      if (res.report.sigma_clamped)
        std::fprintf(stderr, "warning: noise estimate clamped to %g in %zu iterations\n", kSigmaFloor,
                     res.report.sigma_clamped);
      if (res.report.cg_not_converged)
        std::fprintf(stderr, "warning: %zu inner CG solves did not converge\n", res.report.cg_not_converged);
    } else if (met->parsed()) {
      const ScalarGrid x = load_grid(me_x), ref = load_grid(me_ref);
      std::printf("psnr %s\nssim %s\n", format_metric(psnr(x, ref)).c_str(), format_metric(ssim(x, ref)).c_str());
    }
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
