// Beam-steering trajectories for rotating, accordion and combined lattices,
// their update-rate/aperture diagnostics, and the effective flux per cell.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dynlattice/core_optics.hpp"

namespace dynlattice {

struct RotationSpec {
  double omega = 0.0;       // rad/s
  double separation = 0.0;  // D, m

  void validate() const {
    if (!std::isfinite(omega)) fail(ErrorCode::InvalidInput, "rotation rate must be finite");
    if (!(separation >= 0.0)) fail(ErrorCode::InvalidInput, "beam separation must be >= 0");
  }
};

enum class AccordionProfile { LinearInSeparation, LinearInPeriod, SmoothstepInPeriod };

struct AccordionSpec {
  double period_start = 0.0;  // m
  double period_end = 0.0;    // m
  double duration = 0.0;      // s
  AccordionProfile profile = AccordionProfile::LinearInPeriod;

  void validate() const {
    if (!(period_start > 0.0) || !(period_end > 0.0))
      fail(ErrorCode::InvalidInput, "accordion periods must be positive");
    if (!(duration > 0.0)) fail(ErrorCode::InvalidInput, "accordion duration must be positive");
  }

  /// Lattice period at normalized time u in [0, 1].
  double period_at(double u, const WaveSpec& wave, double focal_length) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (profile) {
      case AccordionProfile::LinearInPeriod:
        return period_start + (period_end - period_start) * u;
      case AccordionProfile::SmoothstepInPeriod: {
        const double s = u * u * (3.0 - 2.0 * u);
        return period_start + (period_end - period_start) * s;
      }
      case AccordionProfile::LinearInSeparation: {
        const double d0 = separation_for_period(wave, focal_length, period_start);
        const double d1 = separation_for_period(wave, focal_length, period_end);
        return period_paraxial(wave, focal_length, d0 + (d1 - d0) * u);
      }
    }
    return period_start;
  }
};

/// Position of the steered beam; the mirror beam sits at (-x1, -y1).
struct SteeringSample {
  double t = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  Vec2 position() const { return {x1, y1}; }
  double radius() const { return std::hypot(x1, y1); }
  double azimuth() const { return std::atan2(y1, x1); }
};

struct AtomSpec {
  double mass = 0.0;  // kg
  std::string label;
};

inline constexpr double kPlanck = 6.62607015e-34;           // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

inline std::optional<AtomSpec> atom_by_label(std::string_view label) {
  struct Entry {
    std::string_view label;
    double mass_u;
  };
  static constexpr Entry kTable[] = {
      {"li6", 6.0151228874},  {"li7", 7.0160034366},  {"na23", 22.9897692820},
      {"k39", 38.9637064864}, {"k40", 39.963998166},  {"rb85", 84.911789738},
      {"rb87", 86.909180527}, {"cs133", 132.905451961}, {"yb174", 173.938866437},
  };
  for (const auto& e : kTable)
    if (e.label == label) return AtomSpec{e.mass_u * kAtomicMassUnit, std::string(label)};
  return std::nullopt;
}

/// Flux quanta per lattice cell in the rotating frame, 2 m Omega d^2 / h.
inline double flux_quanta_per_cell(const AtomSpec& atom, double omega, double period) {
  if (!(atom.mass > 0.0)) fail(ErrorCode::InvalidInput, "atom mass must be positive");
  if (!(omega >= 0.0)) fail(ErrorCode::InvalidInput, "rotation rate must be >= 0");
  if (!(period > 0.0)) fail(ErrorCode::InvalidInput, "lattice period must be positive");
  return 2.0 * atom.mass * omega * period * period / kPlanck;
}

/// Number of samples at t = k / rate in [0, duration).
inline std::size_t sample_count(double rate, double duration) {
  if (!(rate > 0.0)) fail(ErrorCode::InvalidInput, "sample rate must be positive");
  if (!(duration > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
}

/// A continuous steering trajectory: separation D(t) along azimuth angle(t).
class SteeringSchedule {
 public:
  enum class Kind { Fixed, Rotation, Accordion, Composed };

  static SteeringSchedule fixed(double separation, double azimuth, double duration) {
    if (!(separation >= 0.0)) fail(ErrorCode::InvalidInput, "beam separation must be >= 0");
    SteeringSchedule s;
    s.kind_ = Kind::Fixed;
    s.rotation_ = {0.0, separation};
    s.azimuth_ = azimuth;
    s.duration_ = duration;
    return s;
  }

  static SteeringSchedule rotation(const RotationSpec& spec, double duration) {
    spec.validate();
    SteeringSchedule s;
    s.kind_ = Kind::Rotation;
    s.rotation_ = spec;
    s.duration_ = duration;
    return s;
  }

  /// Accordion along a fixed azimuth. Both end periods must lie between the
  /// lens resolution limit and a third of the focal spot radius.
  static SteeringSchedule accordion(const AccordionSpec& spec, const WaveSpec& wave, const LensModel& lens,
                                    double focal_waist, double azimuth = 0.0) {
    return make_breathing(Kind::Accordion, 0.0, spec, wave, lens, focal_waist, azimuth);
  }

  /// Rotation at `omega` while the period follows the accordion profile.
  static SteeringSchedule composed(double omega, const AccordionSpec& spec, const WaveSpec& wave,
                                   const LensModel& lens, double focal_waist) {
    if (!std::isfinite(omega)) fail(ErrorCode::InvalidInput, "rotation rate must be finite");
    return make_breathing(Kind::Composed, omega, spec, wave, lens, focal_waist, 0.0);
  }

  Kind kind() const { return kind_; }
  double duration() const { return duration_; }
  double omega() const { return rotation_.omega; }

  double separation_at(double t) const {
    if (kind_ == Kind::Fixed || kind_ == Kind::Rotation) return rotation_.separation;
    const double period = accordion_.period_at(t / accordion_.duration, wave_, focal_length_);
    return separation_for_period(wave_, focal_length_, period);
  }

  double angle_at(double t) const { return azimuth_ + rotation_.omega * t; }

  SteeringSample sample_at(double t) const {
    const double half = separation_at(t) / 2.0;
    const double angle = angle_at(t);
    return {t, half * std::cos(angle), half * std::sin(angle)};
  }

  std::vector<SteeringSample> samples(double rate) const {
    const std::size_t count = sample_count(rate, duration_);
    std::vector<SteeringSample> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(sample_at(static_cast<double>(k) / rate));
    return out;
  }

 private:
  static SteeringSchedule make_breathing(Kind kind, double omega, const AccordionSpec& spec, const WaveSpec& wave,
                                         const LensModel& lens, double focal_waist, double azimuth) {
    spec.validate();
    wave.validate();
    lens.validate();
    if (!(focal_waist > 0.0)) fail(ErrorCode::InvalidInput, "focal waist must be positive");
    const double d_min = min_period(wave, lens.numerical_aperture);
    const double d_max = focal_waist / 3.0;
    for (double d : {spec.period_start, spec.period_end}) {
      if (d < d_min)
        fail(ErrorCode::Resolution, "target period " + std::to_string(d) +
                                        " m is below the lens resolution limit " + std::to_string(d_min) + " m");
      if (d > d_max)
        fail(ErrorCode::Envelope, "target period " + std::to_string(d) +
                                      " m exceeds a third of the focal waist (" + std::to_string(d_max) + " m)");
      const double half = separation_for_period(wave, lens.focal_length, d) / 2.0;
      (void)ray_angle(lens, Vec2(half, 0.0));
    }
    SteeringSchedule s;
    s.kind_ = kind;
    s.rotation_ = {omega, 0.0};
    s.accordion_ = spec;
    s.wave_ = wave;
    s.focal_length_ = lens.focal_length;
    s.azimuth_ = azimuth;
    s.duration_ = spec.duration;
    return s;
  }

  Kind kind_ = Kind::Fixed;
  RotationSpec rotation_;
  AccordionSpec accordion_;
  WaveSpec wave_;
  double focal_length_ = 1.0;
  double azimuth_ = 0.0;
  double duration_ = 0.0;
};

inline std::vector<SteeringSample> rotation_samples(const RotationSpec& spec, double rate, double duration) {
  return SteeringSchedule::rotation(spec, duration).samples(rate);
}

inline std::vector<SteeringSample> accordion_samples(const AccordionSpec& spec, const WaveSpec& wave,
                                                     const LensModel& lens, double focal_waist, double rate) {
  return SteeringSchedule::accordion(spec, wave, lens, focal_waist).samples(rate);
}

inline std::vector<SteeringSample> compose_samples(double omega, const AccordionSpec& spec, const WaveSpec& wave,
                                                   const LensModel& lens, double focal_waist, double rate) {
  return SteeringSchedule::composed(omega, spec, wave, lens, focal_waist).samples(rate);
}

struct ScheduleDiagnostics {
  double omega_max = 0.0;  // rad/s
  std::vector<std::size_t> aperture_violations;
  std::vector<std::size_t> jump_violations;
  bool rate_mismatch = false;

  bool ok() const { return aperture_violations.empty() && jump_violations.empty() && !rate_mismatch; }
};

/// Checks a sampled trajectory against the synthesizer update rate, the
/// lens aperture and a smoothness quantum of 2 pi / samples_per_revolution
/// (per-step azimuth change, and per-step relative radius change).
inline ScheduleDiagnostics validate_schedule(const std::vector<SteeringSample>& samples, double update_rate,
                                             double samples_per_revolution, const LensModel& lens) {
  if (!(update_rate > 0.0) || !(samples_per_revolution > 0.0))
    fail(ErrorCode::InvalidInput, "update rate and smoothness must be positive");
  ScheduleDiagnostics out;
  out.omega_max = kTwoPi * update_rate / samples_per_revolution;
  const double quantum = kTwoPi / samples_per_revolution * (1.0 + 1e-9);
  const double dt = 1.0 / update_rate;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      (void)ray_angle(lens, samples[i].position());
    } catch (const Error&) {
      out.aperture_violations.push_back(i);
    }
    if (i == 0) continue;
    const auto& prev = samples[i - 1];
    const auto& cur = samples[i];
    if (std::abs((cur.t - prev.t) - dt) > 1e-9 * dt) out.rate_mismatch = true;
    const double r0 = prev.radius();
    const double r1 = cur.radius();
    bool jump = false;
    if (r0 > 0.0 && r1 > 0.0) {
      const double dphi = std::remainder(cur.azimuth() - prev.azimuth(), kTwoPi);
      jump = std::abs(dphi) > quantum;
    }
    const double rmax = std::max(r0, r1);
    if (rmax > 0.0 && std::abs(r1 - r0) / rmax > quantum) jump = true;
    if (jump) out.jump_violations.push_back(i);
  }
  return out;
}

// CSV interchange: header `t_s,x1_m,y1_m`, full double precision.

inline std::string write_schedule_csv(const std::vector<SteeringSample>& samples) {
  std::string out = "t_s,x1_m,y1_m\n";
  char buf[96];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t, s.x1, s.y1);
    out += buf;
  }
  return out;
}

inline std::vector<SteeringSample> parse_schedule_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t_s,x1_m,y1_m")
    fail(ErrorCode::Parse, "schedule CSV must start with header t_s,x1_m,y1_m");
  std::vector<SteeringSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    SteeringSample s;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &s.t, &s.x1, &s.y1, &tail) != 3)
      fail(ErrorCode::Parse, "malformed schedule row at line " + std::to_string(lineno));
    out.push_back(s);
  }
  return out;
}

}  // namespace dynlattice
