// Compiles steering trajectories into per-tick RF programs for a pair of
// dual-axis acousto-optic deflectors.
//
// Deflection model: each axis deflects by phi = kappa (f - f_c) relative to
// the centre-frequency beam, and relay lens L1 maps that angle to a
// front-focal-plane coordinate x = f1 tan(phi). Diffracted power is modelled
// as amp^2 * eta(f).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dynlattice/core_optics.hpp"
#include "dynlattice/schedules.hpp"

namespace dynlattice {

struct EfficiencyPoint {
  double frequency = 0.0;   // Hz
  double efficiency = 1.0;  // (0, 1]
};

struct AodModel {
  double center_frequency = 50e6;  // Hz
  double bandwidth = 25e6;         // Hz
  double kappa = 4e-9;             // rad/Hz
  // Sorted by frequency. Empty means a flat response (eta = 1).
  std::vector<EfficiencyPoint> efficiency_table;
  // Optical frequency shift from an upstream modulator; only moves the
  // effective centre used by detuning_check.
  double frequency_offset = 0.0;

  double band_low() const { return center_frequency - bandwidth / 2.0; }
  double band_high() const { return center_frequency + bandwidth / 2.0; }
  double effective_center() const { return center_frequency + frequency_offset; }

  void validate() const {
    if (!(center_frequency > 0.0)) fail(ErrorCode::InvalidInput, "AOD centre frequency must be positive");
    if (!(bandwidth > 0.0)) fail(ErrorCode::InvalidInput, "AOD bandwidth must be positive");
    if (!(kappa > 0.0)) fail(ErrorCode::InvalidInput, "AOD deflection coefficient must be positive");
    for (std::size_t i = 0; i < efficiency_table.size(); ++i) {
      const auto& p = efficiency_table[i];
      if (!(p.efficiency > 0.0 && p.efficiency <= 1.0))
        fail(ErrorCode::InvalidInput, "diffraction efficiency must lie in (0, 1]");
      if (i > 0 && !(p.frequency > efficiency_table[i - 1].frequency))
        fail(ErrorCode::InvalidInput, "efficiency table frequencies must be strictly increasing");
    }
  }

  /// Linear interpolation of the efficiency table.
  double efficiency_at(double f) const {
    if (efficiency_table.empty()) return 1.0;
    const auto& tab = efficiency_table;
    if (f < tab.front().frequency || f > tab.back().frequency)
      fail(ErrorCode::Coverage, "efficiency table does not cover " + std::to_string(f) + " Hz");
    if (tab.size() == 1) return tab.front().efficiency;
    auto hi = std::upper_bound(tab.begin(), tab.end(), f,
                               [](double v, const EfficiencyPoint& p) { return v < p.frequency; });
    if (hi == tab.end()) return tab.back().efficiency;
    if (hi == tab.begin()) return tab.front().efficiency;
    const auto lo = hi - 1;
    const double u = (f - lo->frequency) / (hi->frequency - lo->frequency);
    return lo->efficiency + u * (hi->efficiency - lo->efficiency);
  }
};

struct RelayModel {
  double f1 = 0.3;  // m

  void validate() const {
    if (!(f1 > 0.0)) fail(ErrorCode::InvalidInput, "relay focal length must be positive");
  }
};

struct RfTick {
  double t = 0.0;
  double freq_x = 0.0;
  double freq_y = 0.0;
  double amp_x = 1.0;
  double amp_y = 1.0;

  bool operator==(const RfTick&) const = default;
};

enum class AodId { A, B };

struct RfProgram {
  AodId aod_id = AodId::A;
  double update_rate = 100e3;  // Hz
  std::vector<RfTick> ticks;
};

struct FrequencyPair {
  double x = 0.0;
  double y = 0.0;
};

inline double axis_to_frequency(const RelayModel& relay, const AodModel& aod, double coord) {
  return aod.center_frequency + std::atan(coord / relay.f1) / aod.kappa;
}

inline double frequency_to_axis(const RelayModel& relay, const AodModel& aod, double f) {
  return relay.f1 * std::tan(aod.kappa * (f - aod.center_frequency));
}

/// Drive frequencies that place the steered beam at `target`. Throws a range
/// error naming the axis when a frequency falls outside the AOD band.
inline FrequencyPair position_to_frequencies(const RelayModel& relay, const AodModel& aod, const Vec2& target) {
  relay.validate();
  aod.validate();
  const FrequencyPair f{axis_to_frequency(relay, aod, target.x()), axis_to_frequency(relay, aod, target.y())};
  const double slack = 1e-9 * aod.bandwidth;
  auto check = [&](double freq, const char* axis) {
    if (freq < aod.band_low() - slack || freq > aod.band_high() + slack)
      fail(ErrorCode::Range, std::string("axis ") + axis + " frequency " + std::to_string(freq) +
                                 " Hz lies outside the AOD band [" + std::to_string(aod.band_low()) + ", " +
                                 std::to_string(aod.band_high()) + "] Hz");
  };
  check(f.x, "x");
  check(f.y, "y");
  return f;
}

inline Vec2 frequencies_to_position(const RelayModel& relay, const AodModel& aod, const FrequencyPair& f) {
  return {frequency_to_axis(relay, aod, f.x), frequency_to_axis(relay, aod, f.y)};
}

/// One tick per sample. Samples must sit on the update grid t = k / rate
/// with consecutive k.
inline RfProgram compile_program(const std::vector<SteeringSample>& samples, const AodModel& aod,
                                 const RelayModel& relay, double update_rate, AodId id = AodId::A,
                                 double reference_amplitude = 0.8) {
  if (!(update_rate > 0.0)) fail(ErrorCode::InvalidInput, "update rate must be positive");
  if (!(reference_amplitude >= 0.0 && reference_amplitude <= 1.0))
    fail(ErrorCode::InvalidInput, "reference amplitude must lie in [0, 1]");
  RfProgram prog{id, update_rate, {}};
  prog.ticks.reserve(samples.size());
  long long prev_k = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double ticks = samples[i].t * update_rate;
    const long long k = std::llround(ticks);
    if (std::abs(ticks - static_cast<double>(k)) > 1e-6 || (i > 0 && k != prev_k + 1))
      fail(ErrorCode::Contract, "sample " + std::to_string(i) + " at t = " + std::to_string(samples[i].t) +
                                    " s is not on the " + std::to_string(update_rate) + " Hz update grid");
    prev_k = k;
    FrequencyPair f;
    try {
      f = position_to_frequencies(relay, aod, samples[i].position());
    } catch (const Error& e) {
      fail(e.code(), "tick " + std::to_string(i) + ": " + e.what());
    }
    prog.ticks.push_back({static_cast<double>(k) / update_rate, f.x, f.y, reference_amplitude, reference_amplitude});
  }
  return prog;
}

struct CalibrationResult {
  RfProgram program;
  double scale = 1.0;  // renormalization applied after clipping (1 when none)
  std::vector<std::string> warnings;
};

/// Divides each amplitude by sqrt(eta(f)) so amp^2 * eta is flat. If any
/// amplitude would exceed 1 the whole program is scaled down together and a
/// warning is recorded.
inline CalibrationResult calibrate_amplitudes(const RfProgram& program, const AodModel& aod) {
  aod.validate();
  CalibrationResult out{program, 1.0, {}};
  double peak = 0.0;
  for (std::size_t i = 0; i < out.program.ticks.size(); ++i) {
    auto& tick = out.program.ticks[i];
    try {
      tick.amp_x /= std::sqrt(aod.efficiency_at(tick.freq_x));
      tick.amp_y /= std::sqrt(aod.efficiency_at(tick.freq_y));
    } catch (const Error& e) {
      fail(e.code(), "tick " + std::to_string(i) + ": " + e.what());
    }
    peak = std::max({peak, tick.amp_x, tick.amp_y});
  }
  if (peak > 1.0) {
    out.scale = 1.0 / peak;
    for (auto& tick : out.program.ticks) {
      tick.amp_x *= out.scale;
      tick.amp_y *= out.scale;
    }
    out.warnings.push_back("calibrated amplitude reached " + std::to_string(peak) +
                           "; program renormalized by " + std::to_string(out.scale));
  }
  return out;
}

/// Largest excursion of either axis from the AOD centre frequency.
inline double modulation_amplitude(const RfProgram& program, const AodModel& aod) {
  double m = 0.0;
  for (const auto& t : program.ticks)
    m = std::max({m, std::abs(t.freq_x - aod.center_frequency), std::abs(t.freq_y - aod.center_frequency)});
  return m;
}

struct DetuningResult {
  bool ok = false;
  double separation = 0.0;  // |f_cA - f_cB|
  double required = 0.0;    // 2 max(modA, modB)
  double margin() const { return separation - required; }
};

/// Orthogonal pairs stay mutually incoherent only if the centre frequencies
/// differ by more than twice the larger modulation amplitude.
inline DetuningResult detuning_check(const AodModel& a, const AodModel& b, double modulation_a, double modulation_b) {
  DetuningResult r;
  r.separation = std::abs(a.effective_center() - b.effective_center());
  r.required = 2.0 * std::max(modulation_a, modulation_b);
  r.ok = r.separation > r.required;
  return r;
}

inline std::string emit_program(const RfProgram& program) {
  std::string out = "t_s,freq_x_hz,freq_y_hz,amp_x,amp_y\n";
  char buf[160];
  for (const auto& t : program.ticks) {
    std::snprintf(buf, sizeof buf, "%.9f,%.3f,%.3f,%.9f,%.9f\n", t.t, t.freq_x, t.freq_y, t.amp_x, t.amp_y);
    out += buf;
  }
  return out;
}

inline RfProgram parse_program(const std::string& text, AodId id, double update_rate) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t_s,freq_x_hz,freq_y_hz,amp_x,amp_y")
    fail(ErrorCode::Parse, "RF program must start with header t_s,freq_x_hz,freq_y_hz,amp_x,amp_y");
  RfProgram prog{id, update_rate, {}};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    RfTick t;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf%c", &t.t, &t.freq_x, &t.freq_y, &t.amp_x, &t.amp_y,
                    &tail) != 5)
      fail(ErrorCode::Parse, "malformed RF program row at line " + std::to_string(lineno));
    prog.ticks.push_back(t);
  }
  return prog;
}

}  // namespace dynlattice
