#pragma once

// Experiment runner: simulate one noisy relaxed scan per phantom, then for
// every (tau, gamma, nu0) combination run relaxation adaption, the core stage
// and the deconvolution, and score the results against the ground truth.
//
// One job covers a (phantom, tau, gamma) triple; its core response is shared
// by all nu0 values. Jobs run on a small worker pool and write into
// preallocated slots, so the tables do not depend on scheduling.
//
// Outputs in the manifest's output directory:
//   metrics.csv  one row per (phantom, tau, gamma, nu0)
//   summary.csv  phantom-averaged rows plus argmax rows
//   timings.log  wall-clock times per job (kept out of the CSV files)
//   images/      16-bit PGM images of tr(A) and rho

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "mpirelax/config.hpp"
#include "mpirelax/core_stage.hpp"
#include "mpirelax/deconv.hpp"
#include "mpirelax/io.hpp"
#include "mpirelax/metrics.hpp"
#include "mpirelax/phantom.hpp"
#include "mpirelax/relaxation.hpp"
#include "mpirelax/simulate.hpp"

namespace mpirelax {

/// Ground truth and measured data of one phantom.
struct PhantomCase {
  std::string name;
  ScalarGrid truth;        // on the reconstruction grid
  ScalarGrid truth_trace;  // tr(A[truth]) on the reconstruction grid
  ScanRecord measured;     // relaxed, noisy scan
};

struct RunResult {
  std::string phantom;
  double tau = 0.0;
  double gamma = 0.0;
  double nu0 = 0.0;
  std::size_t n_it = 0;
  double psnr_trace = std::numeric_limits<double>::quiet_NaN();
  double ssim_trace = std::numeric_limits<double>::quiet_NaN();
  double psnr_rho = std::numeric_limits<double>::quiet_NaN();
  double ssim_rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t core_iterations = 0;
  bool core_converged = false;
  std::string status = "ok";
  double core_seconds = 0.0;
  double deconv_seconds = 0.0;

  bool ok() const { return status == "ok"; }
};

struct SummaryRow {
  std::string kind;  // "mean" or "argmax_<metric>"
  double tau = 0.0, gamma = 0.0, nu0 = 0.0;
  double psnr_trace = 0.0, ssim_trace = 0.0, psnr_rho = 0.0, ssim_rho = 0.0;
  std::size_t runs = 0;
};

struct PipelineResult {
  std::vector<RunResult> runs;
  std::vector<SummaryRow> summary;
};

inline Denoiser select_denoiser(const std::string& name) {
  if (name == "tikhonov") return default_denoiser;
  if (name == "identity") return identity_denoiser;
  throw ConfigError("unknown denoiser " + name);
}

/// Rasterizes the phantom, simulates the Langevin scan on the fine grid, applies
/// Debye relaxation with tau_gt and adds noise with seed manifest.seed + index.
inline PhantomCase prepare_case(const ExperimentManifest& m, std::size_t index) {
  const Phantom phantom = load_phantom(m.phantoms.at(index));
  PhantomCase pc;
  pc.name = phantom.name.empty() ? "phantom" + std::to_string(index) : phantom.name;
  const ScalarGrid fine = rasterize_phantom(phantom, m.sim_grid()).grid;
  pc.truth = rasterize_phantom(phantom, m.grid()).grid;
  pc.truth_trace = trace_of(core_operator_apply(pc.truth, m.physics.h_sat(), m.physics));
  const ScanRecord s_ad = forward_langevin(fine, m.trajectory.build(), m.physics);
  pc.measured = add_noise(forward_debye(s_ad, m.tau_gt, s_ad.initial_sample), m.snr_db, m.seed + index, m.noise_power);
  return pc;
}

inline std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string run_stem(const std::string& phantom, double tau, double gamma) {
  return phantom + "_tau" + format_param(tau) + "_gamma" + format_param(gamma);
}

/// Relaxation adaption, core stage and deconvolution for one phantom and one
/// (tau, gamma); one result per nu0. Stage errors end up in the status field.
inline std::vector<RunResult> run_job(const ExperimentManifest& m, const PhantomCase& pc, double tau, double gamma,
                                      const std::string& image_dir = {}) {
  using clock = std::chrono::steady_clock;
  std::vector<RunResult> out;
  for (double nu0 : m.nu0s) {
    RunResult r;
    r.phantom = pc.name;
    r.tau = tau;
    r.gamma = gamma;
    r.nu0 = nu0;
    r.n_it = m.deconv.iterations;
    out.push_back(r);
  }
  MatrixFieldGrid core;
  try {
    const auto t0 = clock::now();
    const ScanRecord adapted = relaxation_adaption(pc.measured, RelaxationParams::uniform(tau, pc.measured.dt));
    CoreStageConfig cc = m.core;
    cc.gamma = gamma;
    cc.geometry = m.grid();
    const CoreStageResult cr = core_stage_solve(adapted, cc, m.physics);
    const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
    core = cr.field;
    const ScalarGrid trace = trace_of(core);
    const double pt = psnr(trace, pc.truth_trace), st = ssim(trace, pc.truth_trace);
    for (auto& r : out) {
      r.psnr_trace = pt;
      r.ssim_trace = st;
      r.core_iterations = cr.report.iterations;
      r.core_converged = cr.report.converged;
      r.core_seconds = seconds;
    }
    if (!image_dir.empty()) save_pgm(image_dir + "/" + run_stem(pc.name, tau, gamma) + "_trace.pgm", trace);
  } catch (const Error& e) {
    for (auto& r : out) r.status = std::string("core: ") + e.what();
    return out;
  }

  const Denoiser denoiser = select_denoiser(m.denoiser);
  for (auto& r : out) {
    try {
      const auto t0 = clock::now();
      DeconvConfig dc = m.deconv;
      dc.nu0 = r.nu0;
      const DeconvResult dr = hqs_deconvolve(core, m.physics.h_sat(), m.physics, dc, denoiser);
      r.deconv_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      const ScalarGrid ref =
          dr.rho.geometry() == pc.truth.geometry() ? pc.truth : pad_and_cut(pc.truth, dc.padding_pct, dc.cut_pct);
      r.psnr_rho = psnr(dr.rho, ref);
      r.ssim_rho = ssim(dr.rho, ref);
      if (!image_dir.empty())
        save_pgm(image_dir + "/" + run_stem(pc.name, r.tau, r.gamma) + "_nu" + format_param(r.nu0) + "_rho.pgm", dr.rho);
    } catch (const Error& e) {
      r.status = std::string("deconv: ") + e.what();
    }
  }
  return out;
}

/// Phantom-averaged metrics per (tau, gamma, nu0), arithmetic in dB, over the
/// successful runs; followed by one argmax row per metric. Ties go to the
/// smallest (tau, gamma, nu0).
inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  std::map<std::tuple<double, double, double>, SummaryRow> acc;
  for (const auto& r : runs) {
    auto& s = acc[{r.tau, r.gamma, r.nu0}];
    s.kind = "mean";
    s.tau = r.tau;
    s.gamma = r.gamma;
    s.nu0 = r.nu0;
    if (!r.ok()) continue;
    s.psnr_trace += r.psnr_trace;
    s.ssim_trace += r.ssim_trace;
    s.psnr_rho += r.psnr_rho;
    s.ssim_rho += r.ssim_rho;
    ++s.runs;
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, s] : acc) {
    if (s.runs > 0) {
      const double n = static_cast<double>(s.runs);
      s.psnr_trace /= n;
      s.ssim_trace /= n;
      s.psnr_rho /= n;
      s.ssim_rho /= n;
    } else {
      s.psnr_trace = s.ssim_trace = s.psnr_rho = s.ssim_rho = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(s);
  }
  const std::size_t means = rows.size();
  const std::pair<const char*, double SummaryRow::*> metrics[] = {{"argmax_psnr_rho", &SummaryRow::psnr_rho},
                                                                   {"argmax_ssim_rho", &SummaryRow::ssim_rho},
                                                                   {"argmax_psnr_trace", &SummaryRow::psnr_trace},
                                                                   {"argmax_ssim_trace", &SummaryRow::ssim_trace}};
  for (const auto& [name, field] : metrics) {
    const SummaryRow* best = nullptr;
    for (std::size_t i = 0; i < means; ++i)
      if (rows[i].runs > 0 && (!best || rows[i].*field > best->*field)) best = &rows[i];
    if (!best) continue;
    SummaryRow a = *best;
    a.kind = name;
    rows.push_back(a);
  }
  return rows;
}

/// The tau maximizing the phantom-averaged rho PSNR at fixed (gamma, nu0).
inline double argmax_tau(const std::vector<SummaryRow>& rows, double gamma, double nu0) {
  const SummaryRow* best = nullptr;
  for (const auto& r : rows)
    if (r.kind == "mean" && r.runs > 0 && r.gamma == gamma && r.nu0 == nu0 && (!best || r.psnr_rho > best->psnr_rho))
      best = &r;
  if (!best) throw ConfigError("no successful runs for the requested gamma and nu0");
  return best->tau;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "phantom,tau,gamma,nu0,n_it,psnr_trace,ssim_trace,psnr_rho,ssim_rho,core_iterations,core_converged,status\n";
  for (const auto& r : runs) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.phantom << ',' << format_param(r.tau) << ',' << format_param(r.gamma) << ',' << format_param(r.nu0) << ','
        << r.n_it << ',' << format_metric(r.psnr_trace) << ',' << format_metric(r.ssim_trace) << ','
        << format_metric(r.psnr_rho) << ',' << format_metric(r.ssim_rho) << ',' << r.core_iterations << ','
        << (r.core_converged ? 1 : 0) << ',' << status << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "kind,tau,gamma,nu0,psnr_trace,ssim_trace,psnr_rho,ssim_rho,runs\n";
  for (const auto& r : rows)
    out << r.kind << ',' << format_param(r.tau) << ',' << format_param(r.gamma) << ',' << format_param(r.nu0) << ','
        << format_metric(r.psnr_trace) << ',' << format_metric(r.ssim_trace) << ',' << format_metric(r.psnr_rho) << ','
        << format_metric(r.ssim_rho) << ',' << r.runs << '\n';
}

struct PipelineOptions {
  bool write_files = true;
  /// Called after every finished job with (done, total); serialized.
  std::function<void(std::size_t, std::size_t)> progress;
};

inline PipelineResult run_pipeline(const ExperimentManifest& m, const PipelineOptions& opt = {}) {
  m.validate();
  std::string image_dir;
  if (opt.write_files) {
    std::filesystem::create_directories(m.output_dir);
    if (m.write_images) {
      image_dir = m.output_dir + "/images";
      std::filesystem::create_directories(image_dir);
    }
  }

  std::vector<PhantomCase> cases;
  for (std::size_t i = 0; i < m.phantoms.size(); ++i) cases.push_back(prepare_case(m, i));

  struct Job {
    std::size_t phantom;
    double tau, gamma;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < cases.size(); ++p)
    for (double tau : m.taus)
      for (double gamma : m.gammas) jobs.push_back({p, tau, gamma});

  std::vector<std::vector<RunResult>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      slots[j] = run_job(m, cases[job.phantom], job.tau, job.gamma, image_dir);
      std::lock_guard lock(progress_mutex);
      ++done;
      if (opt.progress) opt.progress(done, jobs.size());
    }
  };
  const std::size_t threads = std::min(m.workers, std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  PipelineResult result;
  for (auto& s : slots)
    for (auto& r : s) result.runs.push_back(std::move(r));
  result.summary = summarize(result.runs);

  if (opt.write_files) {
    auto metrics = detail::open_out(m.output_dir + "/metrics.csv", false);
    write_metrics_csv(metrics, result.runs);
    auto summary = detail::open_out(m.output_dir + "/summary.csv", false);
    write_summary_csv(summary, result.summary);
    auto timings = detail::open_out(m.output_dir + "/timings.log", false);
    for (const auto& r : result.runs)
      timings << r.phantom << " tau=" << format_param(r.tau) << " gamma=" << format_param(r.gamma)
              << " nu0=" << format_param(r.nu0) << " core_s=" << r.core_seconds << " deconv_s=" << r.deconv_seconds
              << '\n';
  }
  return result;
}

}  // namespace mpirelax
