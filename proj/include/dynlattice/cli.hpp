// Command implementations behind the `dynlattice` executable. Each command
// writes its outputs in a fixed order so identical inputs give
// byte-identical files.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dynlattice/analysis.hpp"
#include "dynlattice/io.hpp"
#include "dynlattice/rf_compiler.hpp"
#include "dynlattice/scene.hpp"
#include "dynlattice/schedules.hpp"

namespace dynlattice::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::NoLattice:
    case ErrorCode::GridMismatch:
    case ErrorCode::FocalSingularity:
      return kRuntime;
    default:
      return kValidation;
  }
}

inline int report(std::ostream& err, const Error& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& issue : v->issues()) err << "error[validation]: " << issue << "\n";
  } else {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
  }
  return exit_code_for(e.code());
}

/// Runs fn(i) for i in [0, count) on a few worker threads. The first
/// failure by index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Frame at time t. A 2D lattice adds the orthogonal pair, steered a
/// quarter turn ahead, summed incoherently.
inline IntensityFrame render_frame(const SceneConfig& cfg, const SteeringSchedule& schedule, double t) {
  const SteeringSample s = schedule.sample_at(t);
  BeamPair a{cfg.beam};
  a.primary.position = s.position();
  if (cfg.dimensions == 1) return vector_fringe_frame(cfg.wave, cfg.lens, a, cfg.grid, cfg.envelope, t);
  BeamPair b{cfg.beam};
  b.primary.position = Vec2(-s.y1, s.x1);
  return combine_lattices(cfg.wave, cfg.lens, a, b, cfg.grid, CombineMode::Incoherent, kDefaultPairDetuning, t,
                          cfg.envelope);
}

inline std::vector<double> frame_times(const SceneConfig& cfg, std::size_t frames) {
  double interval = 0.0;
  if (cfg.frame_interval)
    interval = *cfg.frame_interval;
  else if (frames > 0)
    interval = cfg.schedule.duration / static_cast<double>(frames);
  std::vector<double> times(frames);
  for (std::size_t k = 0; k < frames; ++k) times[k] = static_cast<double>(k) * interval;
  return times;
}

inline std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.pgm", index);
  return buf;
}

/// Renders `frames` snapshots into `out_dir` with a manifest. Pixels are
/// scaled so the peak intensity 4 I0 per beam pair maps to 65535.
inline int cmd_simulate(const SceneConfig& cfg, std::size_t frames, const fs::path& out_dir, std::ostream& out) {
  const SteeringSchedule schedule = cfg.build_schedule();
  const std::vector<double> times = frame_times(cfg, frames);
  std::vector<IntensityFrame> rendered(frames);
  parallel_for(frames, [&](std::size_t k) {
    try {
      rendered[k] = render_frame(cfg, schedule, times[k]);
    } catch (const Error& e) {
      fail(e.code(), "frame " + std::to_string(k) + ": " + e.what());
    }
  });

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.grid_n = cfg.grid.n;
  manifest.extent = cfg.grid.extent;
  manifest.intensity_per_count = 4.0 * cfg.beam.intensity() * cfg.dimensions / 65535.0;
  if (cfg.envelope) manifest.envelope_waist = cfg.beam.waist;
  for (std::size_t k = 0; k < frames; ++k) {
    const std::string name = frame_name(k);
    write_text_file(out_dir / name, encode_pgm(frame_to_image(rendered[k], manifest.intensity_per_count)));
    manifest.frames.push_back({k, name, times[k]});
  }
  write_text_file(out_dir / "manifest.txt", write_manifest(manifest));
  out << "wrote " << frames << " frame(s) and manifest.txt to " << out_dir.string() << "\n";
  return kOk;
}

struct AnalyzeJob {
  std::vector<fs::path> frames;
  std::vector<std::string> labels;
  std::vector<double> times;
  double pixel_size = 0.0;
  double intensity_per_count = 1.0;
  std::optional<double> envelope_waist;
  std::optional<double> exclusion_radius;
};

/// Emits `frame,period_m,uncertainty_m,angle_rad,visibility` records and a
/// summary line. Frames without a lattice get an error record and make the
/// command exit with kRuntime.
inline int run_analysis(const AnalyzeJob& job, std::ostream& out) {
  const std::size_t count = job.frames.size();
  std::vector<std::optional<AnalysisReport>> reports(count);
  std::vector<std::string> failures(count);
  parallel_for(count, [&](std::size_t i) {
    try {
      const double t = i < job.times.size() ? job.times[i] : 0.0;
      const auto frame =
          image_to_frame(decode_pgm(read_text_file(job.frames[i])), job.pixel_size, job.intensity_per_count, t);
      reports[i] = analyze_frame(frame, {job.exclusion_radius, job.envelope_waist});
    } catch (const Error& e) {
      failures[i] = std::string(to_string(e.code()));
    }
  });

  out << "frame,period_m,uncertainty_m,angle_rad,visibility\n";
  std::vector<AnalysisReport> ok;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string& label = job.labels[i];
    if (reports[i]) {
      const auto& r = *reports[i];
      out << label << "," << format_double(r.period) << "," << format_double(r.period_uncertainty) << ","
          << format_double(r.fringe_angle) << "," << format_double(r.visibility) << "\n";
      ok.push_back(r);
    } else {
      out << label << ",error=" << failures[i] << "\n";
    }
  }
  out << "summary,frames=" << count << ",analyzed=" << ok.size() << ",failed=" << (count - ok.size());
  if (ok.size() >= 2) {
    const auto c = period_constancy(ok);
    out << ",mean_period_m=" << format_double(c.mean_period)
        << ",max_relative_period_deviation=" << format_double(c.max_relative_deviation)
        << ",constant=" << (c.constant ? "true" : "false");
  } else if (ok.size() == 1) {
    out << ",mean_period_m=" << format_double(ok.front().period) << ",max_relative_period_deviation=0,constant=true";
  }
  out << "\n";
  return ok.size() == count ? kOk : kRuntime;
}

inline int cmd_analyze_manifest(const fs::path& manifest_path, std::optional<double> exclusion_radius,
                                std::ostream& out) {
  const Manifest m = parse_manifest(read_text_file(manifest_path));
  AnalyzeJob job;
  job.pixel_size = m.pixel_size();
  job.intensity_per_count = m.intensity_per_count;
  job.envelope_waist = m.envelope_waist ? m.envelope_waist : std::optional<double>(INFINITY);
  job.exclusion_radius = exclusion_radius;
  for (const auto& f : m.frames) {
    job.frames.push_back(manifest_path.parent_path() / f.file);
    job.labels.push_back(f.file);
    job.times.push_back(f.time);
  }
  return run_analysis(job, out);
}

inline int cmd_analyze_frames(const std::vector<fs::path>& frames, double pixel_size,
                              std::optional<double> envelope_waist, std::optional<double> exclusion_radius,
                              std::ostream& out) {
  if (!(pixel_size > 0.0)) fail(ErrorCode::InvalidInput, "--pixel-size-m must be positive");
  AnalyzeJob job;
  job.frames = frames;
  for (const auto& f : frames) job.labels.push_back(f.string());
  job.pixel_size = pixel_size;
  job.envelope_waist = envelope_waist;
  job.exclusion_radius = exclusion_radius;
  return run_analysis(job, out);
}

/// Compiles the scene schedule for AOD A and its quarter-turn partner for
/// AOD B, checks their detuning, calibrates amplitudes and writes
/// aod_a.csv, aod_b.csv and schedule.csv.
inline int cmd_compile_rf(const SceneConfig& cfg, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const auto& rf = cfg.rf;
  const std::vector<SteeringSample> samples = cfg.build_schedule().samples(rf.update_rate);
  const auto diag = validate_schedule(samples, rf.update_rate, rf.samples_per_revolution, cfg.lens);
  out << "omega_max_rad_s=" << format_double(diag.omega_max) << "\n";
  if (!diag.ok()) {
    err << "error[validation]: schedule exceeds synthesizer limits (" << diag.aperture_violations.size()
        << " aperture violation(s), " << diag.jump_violations.size() << " step(s) larger than 2 pi / "
        << format_double(rf.samples_per_revolution) << ")\n";
    return kValidation;
  }

  std::vector<SteeringSample> samples_b = samples;
  for (auto& s : samples_b) s = {s.t, -s.y1, s.x1};

  const RfProgram prog_a = compile_program(samples, rf.aod_a, rf.relay, rf.update_rate, AodId::A, rf.reference_amplitude);
  const RfProgram prog_b =
      compile_program(samples_b, rf.aod_b, rf.relay, rf.update_rate, AodId::B, rf.reference_amplitude);
  const double mod_a = modulation_amplitude(prog_a, rf.aod_a);
  const double mod_b = modulation_amplitude(prog_b, rf.aod_b);
  const auto det = detuning_check(rf.aod_a, rf.aod_b, mod_a, mod_b);
  if (!det.ok) {
    err << "error[validation]: detuning violation: AOD centre frequencies differ by " << format_double(det.separation)
        << " Hz but must differ by more than twice the modulation amplitude (2 x "
        << format_double(std::max(mod_a, mod_b)) << " = " << format_double(det.required) << " Hz)\n";
    return kValidation;
  }

  const auto cal_a = calibrate_amplitudes(prog_a, rf.aod_a);
  const auto cal_b = calibrate_amplitudes(prog_b, rf.aod_b);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  write_text_file(out_dir / "aod_a.csv", emit_program(cal_a.program));
  write_text_file(out_dir / "aod_b.csv", emit_program(cal_b.program));
  write_text_file(out_dir / "schedule.csv", write_schedule_csv(samples));

  out << "ticks=" << samples.size() << "\n";
  out << "detuning=ok,separation_hz=" << format_double(det.separation)
      << ",required_hz=" << format_double(det.required) << "\n";
  for (const auto& w : cal_a.warnings) out << "warning: aod_a: " << w << "\n";
  for (const auto& w : cal_b.warnings) out << "warning: aod_b: " << w << "\n";
  return kOk;
}

inline int cmd_flux(const std::optional<std::string>& atom_label, std::optional<double> mass_kg, double rotation_hz,
                    double period_um, std::ostream& out, std::ostream& err) {
  AtomSpec atom;
  if (mass_kg) {
    atom = {*mass_kg, atom_label.value_or("custom")};
  } else if (atom_label) {
    const auto found = atom_by_label(*atom_label);
    if (!found) {
      err << "error[usage]: unknown atom '" << *atom_label << "'; pass --mass-kg\n";
      return kUsage;
    }
    atom = *found;
  } else {
    err << "error[usage]: one of --atom or --mass-kg is required\n";
    return kUsage;
  }
  const double n_phi = flux_quanta_per_cell(atom, kTwoPi * rotation_hz, period_um * 1e-6);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g\n", n_phi);
  out << buf;
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotating and accordion optical lattice simulator, RF compiler and analyzer", "dynlattice"};
  app.require_subcommand(1);

  std::string config_path, out_path, manifest_path;
  std::size_t frames = 0;
  auto* sim = app.add_subcommand("simulate", "Render lattice frames (16-bit PGM) and a manifest");
  sim->add_option("--config", config_path, "Scene JSON")->required();
  sim->add_option("--frames", frames, "Number of frames")->required();
  sim->add_option("--out", out_path, "Output directory")->required();

  double pixel_size = 0.0;
  std::optional<double> waist, exclusion;
  std::vector<std::string> frame_paths;
  auto* ana = app.add_subcommand("analyze", "Measure period, angle and visibility of frames");
  auto* man_opt = ana->add_option("--manifest", manifest_path, "Manifest written by simulate");
  auto* px_opt = ana->add_option("--pixel-size-m", pixel_size, "Pixel pitch for bare frames");
  ana->add_option("--waist-m", waist, "Envelope 1/e^2 radius for bare frames (default: estimated)");
  ana->add_option("--exclusion-radius-cpm", exclusion, "DC exclusion radius in cycles/m");
  auto* frames_opt = ana->add_option("frames", frame_paths, "PGM frames");
  man_opt->excludes(px_opt);
  man_opt->excludes(frames_opt);
  px_opt->needs(frames_opt);
  std::string report_path;
  ana->add_option("--out", report_path, "Write the report to a file instead of stdout");

  auto* rf = app.add_subcommand("compile-rf", "Compile AOD RF programs (CSV) for a scene");
  rf->add_option("--config", config_path, "Scene JSON")->required();
  rf->add_option("--out", out_path, "Output directory")->required();

  std::optional<std::string> atom;
  std::optional<double> mass;
  double rotation_hz = 0.0, period_um = 0.0;
  auto* flux = app.add_subcommand("flux", "Effective flux quanta per lattice cell");
  auto* atom_opt = flux->add_option("--atom", atom, "Atom label (e.g. rb87)");
  flux->add_option("--mass-kg", mass, "Atom mass in kg")->excludes(atom_opt);
  flux->add_option("--rotation-hz", rotation_hz, "Rotation frequency in Hz")->required()->check(CLI::NonNegativeNumber);
  flux->add_option("--period-um", period_um, "Lattice period in micrometres")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(load_scene(config_path), frames, out_path, out);
    if (rf->parsed()) return cmd_compile_rf(load_scene(config_path), out_path, out, err);
    if (flux->parsed()) return cmd_flux(atom, mass, rotation_hz, period_um, out, err);
    if (ana->parsed()) {
      if (man_opt->count() == 0 && px_opt->count() == 0) {
        err << "error[usage]: analyze needs --manifest or --pixel-size-m with frames\n";
        return kUsage;
      }
      std::ostringstream buffer;
      std::ostream& sink = report_path.empty() ? out : static_cast<std::ostream&>(buffer);
      int code = 0;
      if (man_opt->count() > 0) {
        code = cmd_analyze_manifest(manifest_path, exclusion, sink);
      } else {
        std::vector<fs::path> paths(frame_paths.begin(), frame_paths.end());
        code = cmd_analyze_frames(paths, pixel_size, waist, exclusion, sink);
      }
      if (!report_path.empty()) write_text_file(report_path, buffer.str());
      return code;
    }
  } catch (const Error& e) {
    return report(err, e);
  }
  return kUsage;
}

}  // namespace dynlattice::cli
