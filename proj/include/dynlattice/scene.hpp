// JSON scene configuration: strict loading with every validation problem
// reported by field path.
#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynlattice/interference.hpp"
#include "dynlattice/io.hpp"
#include "dynlattice/rf_compiler.hpp"
#include "dynlattice/schedules.hpp"

namespace dynlattice {

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(ErrorCode::Validation, join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out;
    for (const auto& i : issues) out += (out.empty() ? "" : "; ") + i;
    return out;
  }
  std::vector<std::string> issues_;
};

struct ScheduleConfig {
  SteeringSchedule::Kind kind = SteeringSchedule::Kind::Fixed;
  double separation = 2.0e-3;
  double azimuth = 0.0;
  double rotation_hz = 0.0;
  double duration = 0.0;
  AccordionSpec accordion;
};

struct RfConfig {
  double update_rate = 100e3;
  double samples_per_revolution = 100.0;
  double reference_amplitude = 0.8;
  RelayModel relay;
  AodModel aod_a;
  AodModel aod_b;
};

struct SceneConfig {
  WaveSpec wave;
  LensModel lens{LensKind::SineCondition, 0.25, 0.1};
  BeamSpec beam;  // position unused; steering comes from the schedule
  bool envelope = true;
  int dimensions = 1;
  GridSpec grid{512, 2.3e-3};
  ScheduleConfig schedule;
  std::optional<double> frame_interval;
  RfConfig rf;
  std::optional<double> exclusion_radius;

  SteeringSchedule build_schedule() const {
    switch (schedule.kind) {
      case SteeringSchedule::Kind::Fixed:
        return SteeringSchedule::fixed(schedule.separation, schedule.azimuth, schedule.duration);
      case SteeringSchedule::Kind::Rotation:
        return SteeringSchedule::rotation({kTwoPi * schedule.rotation_hz, schedule.separation}, schedule.duration);
      case SteeringSchedule::Kind::Accordion:
        return SteeringSchedule::accordion(schedule.accordion, wave, lens, beam.waist, schedule.azimuth);
      case SteeringSchedule::Kind::Composed:
        return SteeringSchedule::composed(kTwoPi * schedule.rotation_hz, schedule.accordion, wave, lens, beam.waist);
    }
    fail(ErrorCode::Validation, "unknown schedule kind");
  }
};

namespace detail {

class SceneReader {
 public:
  std::vector<std::string> issues;

  void issue(const std::string& path, const std::string& what) { issues.push_back(path + ": " + what); }

  /// Rejects keys outside `allowed`; returns false if `j` is not an object.
  bool object(const nlohmann::json& j, const std::string& path, std::set<std::string> allowed) {
    if (!j.is_object()) {
      issue(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) issue(path.empty() ? key : path + "." + key, "unknown key");
    return true;
  }

  void number(const nlohmann::json& obj, const std::string& path, const char* key, double& dst,
              const std::function<bool(double)>& ok, const char* rule) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string p = join(path, key);
    if (!v.is_number()) {
      issue(p, "expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || !ok(x)) {
      issue(p, std::string("must be ") + rule);
      return;
    }
    dst = x;
  }

  void required(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) issue(join(path, key), "is required");
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

inline bool positive(double x) { return x > 0.0; }
inline bool non_negative(double x) { return x >= 0.0; }
inline bool any_value(double) { return true; }

inline void read_aod(SceneReader& rd, const nlohmann::json& j, const std::string& path, AodModel& aod) {
  if (!rd.object(j, path,
                 {"center_frequency_hz", "bandwidth_hz", "kappa_rad_per_hz", "frequency_offset_hz", "efficiency"}))
    return;
  rd.number(j, path, "center_frequency_hz", aod.center_frequency, positive, "positive");
  rd.number(j, path, "bandwidth_hz", aod.bandwidth, positive, "positive");
  rd.number(j, path, "kappa_rad_per_hz", aod.kappa, positive, "positive");
  rd.number(j, path, "frequency_offset_hz", aod.frequency_offset, any_value, "finite");
  if (!j.contains("efficiency")) return;
  const auto& e = j.at("efficiency");
  const std::string ep = path + ".efficiency";
  if (!rd.object(e, ep, {"kind", "depth", "points"})) return;
  std::string kind = "flat";
  if (e.contains("kind")) kind = e["kind"].is_string() ? e["kind"].get<std::string>() : std::string("?");
  if (kind == "flat") {
    aod.efficiency_table.clear();
  } else if (kind == "ripple") {
    // eta(f) proportional to 1 - depth * cos(2 pi (f - f_c) / B), peaking at 1.
    double depth = 0.05;
    double points = 257;
    rd.number(e, ep, "depth", depth, [](double x) { return x >= 0.0 && x < 1.0; }, "in [0, 1)");
    rd.number(e, ep, "points", points, [](double x) { return x >= 2.0 && x <= 1e6 && x == std::floor(x); },
              "an integer in [2, 1e6]");
    aod.efficiency_table.clear();
    const auto count = static_cast<std::size_t>(points);
    for (std::size_t i = 0; i < count; ++i) {
      const double f = aod.band_low() + aod.bandwidth * static_cast<double>(i) / static_cast<double>(count - 1);
      const double eta = (1.0 - depth * std::cos(kTwoPi * (f - aod.center_frequency) / aod.bandwidth)) / (1.0 + depth);
      aod.efficiency_table.push_back({f, eta});
    }
  } else if (kind == "table") {
    aod.efficiency_table.clear();
    const auto& pts = e.contains("points") ? e.at("points") : nlohmann::json();
    if (!pts.is_array()) {
      rd.issue(ep + ".points", "expected an array of [frequency_hz, efficiency] pairs");
      return;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        rd.issue(ep + ".points[" + std::to_string(i) + "]", "expected [frequency_hz, efficiency]");
        continue;
      }
      aod.efficiency_table.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  } else {
    rd.issue(ep + ".kind", "must be one of flat, ripple, table");
  }
  try {
    aod.validate();
  } catch (const Error& err) {
    rd.issue(path, err.what());
  }
}

inline Jones read_polarization(SceneReader& rd, const nlohmann::json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "linear_x") return jones_linear(0.0);
    if (s == "linear_y") return jones_linear(kPi / 2.0);
    if (s == "circular_left") return jones_circular(true);
    if (s == "circular_right") return jones_circular(false);
    rd.issue(path, "must be linear_x, linear_y, circular_left, circular_right or {\"linear_angle_rad\": v}");
    return jones_linear(0.0);
  }
  if (rd.object(j, path, {"linear_angle_rad"})) {
    double angle = 0.0;
    rd.required(j, path, "linear_angle_rad");
    rd.number(j, path, "linear_angle_rad", angle, any_value, "finite");
    return jones_linear(angle);
  }
  return jones_linear(0.0);
}

inline std::string parse_error_location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses and validates a scene. Throws Error(Parse) with line/column on
/// malformed JSON and ValidationError listing every problem otherwise.
inline SceneConfig parse_scene(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Parse, "JSON parse error at " + detail::parse_error_location(text, e.byte) + ": " + e.what());
  }

  using detail::any_value;
  using detail::non_negative;
  using detail::positive;
  detail::SceneReader rd;
  SceneConfig cfg;
  cfg.beam.polarization = jones_circular(true);
  if (!rd.object(root, "", {"wave", "lens", "beam", "lattice", "grid", "schedule", "frames", "rf", "analysis"}))
    throw ValidationError(rd.issues);

  if (root.contains("wave") && rd.object(root["wave"], "wave", {"wavelength_m"}))
    rd.number(root["wave"], "wave", "wavelength_m", cfg.wave.wavelength, positive, "positive");

  if (root.contains("lens") && rd.object(root["lens"], "lens", {"kind", "focal_length_m", "numerical_aperture"})) {
    const auto& l = root["lens"];
    if (l.contains("kind")) {
      const auto kind = l["kind"].is_string() ? l["kind"].get<std::string>() : std::string();
      if (kind == "sine_condition")
        cfg.lens.kind = LensKind::SineCondition;
      else if (kind == "thin_lens")
        cfg.lens.kind = LensKind::ThinLens;
      else
        rd.issue("lens.kind", "must be sine_condition or thin_lens");
    }
    rd.number(l, "lens", "focal_length_m", cfg.lens.focal_length, positive, "positive");
    rd.number(l, "lens", "numerical_aperture", cfg.lens.numerical_aperture,
              [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
  }

  if (root.contains("beam") &&
      rd.object(root["beam"], "beam", {"focal_waist_m", "amplitude", "polarization", "envelope"})) {
    const auto& b = root["beam"];
    rd.number(b, "beam", "focal_waist_m", cfg.beam.waist, positive, "positive");
    rd.number(b, "beam", "amplitude", cfg.beam.amplitude, positive, "positive");
    if (b.contains("polarization")) cfg.beam.polarization = detail::read_polarization(rd, b["polarization"], "beam.polarization");
    if (b.contains("envelope")) {
      if (b["envelope"].is_boolean())
        cfg.envelope = b["envelope"].get<bool>();
      else
        rd.issue("beam.envelope", "expected a boolean");
    }
  }

  if (root.contains("lattice") && rd.object(root["lattice"], "lattice", {"dimensions"})) {
    const auto& l = root["lattice"];
    if (l.contains("dimensions")) {
      if (l["dimensions"].is_number_integer() && (l["dimensions"] == 1 || l["dimensions"] == 2))
        cfg.dimensions = l["dimensions"].get<int>();
      else
        rd.issue("lattice.dimensions", "must be 1 or 2");
    }
  }

  if (root.contains("grid") && rd.object(root["grid"], "grid", {"n", "extent_m"})) {
    const auto& g = root["grid"];
    if (g.contains("n")) {
      if (g["n"].is_number_unsigned() && g["n"].get<std::size_t>() >= 2 && g["n"].get<std::size_t>() <= 8192)
        cfg.grid.n = g["n"].get<std::size_t>();
      else
        rd.issue("grid.n", "must be an integer in [2, 8192]");
    }
    rd.number(g, "grid", "extent_m", cfg.grid.extent, positive, "positive");
  }

  rd.required(root, "", "schedule");
  if (root.contains("schedule") &&
      rd.object(root["schedule"], "schedule",
                {"kind", "separation_m", "azimuth_rad", "rotation_hz", "duration_s", "period_start_m",
                 "period_end_m", "profile"})) {
    const auto& s = root["schedule"];
    auto& sc = cfg.schedule;
    const auto kind = s.contains("kind") && s["kind"].is_string() ? s["kind"].get<std::string>() : std::string();
    if (kind == "static")
      sc.kind = SteeringSchedule::Kind::Fixed;
    else if (kind == "rotation")
      sc.kind = SteeringSchedule::Kind::Rotation;
    else if (kind == "accordion")
      sc.kind = SteeringSchedule::Kind::Accordion;
    else if (kind == "composed")
      sc.kind = SteeringSchedule::Kind::Composed;
    else
      rd.issue("schedule.kind", "must be static, rotation, accordion or composed");
    rd.number(s, "schedule", "separation_m", sc.separation, non_negative, ">= 0");
    rd.number(s, "schedule", "azimuth_rad", sc.azimuth, any_value, "finite");
    rd.number(s, "schedule", "rotation_hz", sc.rotation_hz, non_negative, ">= 0");
    rd.number(s, "schedule", "duration_s", sc.duration, non_negative, ">= 0");
    rd.number(s, "schedule", "period_start_m", sc.accordion.period_start, positive, "positive");
    rd.number(s, "schedule", "period_end_m", sc.accordion.period_end, positive, "positive");
    sc.accordion.duration = sc.duration;
    if (sc.kind == SteeringSchedule::Kind::Accordion || sc.kind == SteeringSchedule::Kind::Composed) {
      rd.required(s, "schedule", "period_start_m");
      rd.required(s, "schedule", "period_end_m");
      rd.required(s, "schedule", "duration_s");
    }
    if (s.contains("profile")) {
      const auto p = s["profile"].is_string() ? s["profile"].get<std::string>() : std::string();
      if (p == "linear_in_d")
        sc.accordion.profile = AccordionProfile::LinearInPeriod;
      else if (p == "linear_in_D")
        sc.accordion.profile = AccordionProfile::LinearInSeparation;
      else if (p == "smoothstep_in_d")
        sc.accordion.profile = AccordionProfile::SmoothstepInPeriod;
      else
        rd.issue("schedule.profile", "must be linear_in_d, linear_in_D or smoothstep_in_d");
    }
  }

  if (root.contains("frames") && rd.object(root["frames"], "frames", {"interval_s"})) {
    double interval = 0.0;
    if (root["frames"].contains("interval_s")) {
      rd.number(root["frames"], "frames", "interval_s", interval, non_negative, ">= 0");
      cfg.frame_interval = interval;
    }
  }

  if (root.contains("rf") &&
      rd.object(root["rf"], "rf",
                {"update_rate_hz", "samples_per_revolution", "reference_amplitude", "relay_focal_length_m", "aod_a",
                 "aod_b"})) {
    const auto& r = root["rf"];
    rd.number(r, "rf", "update_rate_hz", cfg.rf.update_rate, positive, "positive");
    rd.number(r, "rf", "samples_per_revolution", cfg.rf.samples_per_revolution, positive, "positive");
    rd.number(r, "rf", "reference_amplitude", cfg.rf.reference_amplitude,
              [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]");
    rd.number(r, "rf", "relay_focal_length_m", cfg.rf.relay.f1, positive, "positive");
    if (r.contains("aod_a")) detail::read_aod(rd, r["aod_a"], "rf.aod_a", cfg.rf.aod_a);
    if (r.contains("aod_b")) detail::read_aod(rd, r["aod_b"], "rf.aod_b", cfg.rf.aod_b);
  }

  if (root.contains("analysis") && rd.object(root["analysis"], "analysis", {"exclusion_radius_cpm"})) {
    double radius = 0.0;
    if (root["analysis"].contains("exclusion_radius_cpm")) {
      rd.number(root["analysis"], "analysis", "exclusion_radius_cpm", radius, positive, "positive");
      cfg.exclusion_radius = radius;
    }
  }

  // Cross-field checks only make sense once every field parsed cleanly.
  if (rd.issues.empty()) {
    try {
      (void)cfg.build_schedule();
      const double half = cfg.schedule.separation / 2.0;
      if (cfg.schedule.kind == SteeringSchedule::Kind::Fixed || cfg.schedule.kind == SteeringSchedule::Kind::Rotation)
        (void)ray_angle(cfg.lens, Vec2(half, 0.0));
    } catch (const Error& e) {
      rd.issue("schedule", e.what());
    }
  }
  if (!rd.issues.empty()) throw ValidationError(rd.issues);
  return cfg;
}

inline SceneConfig load_scene(const std::filesystem::path& path) { return parse_scene(read_text_file(path)); }

}  // namespace dynlattice
