// Frame measurement: 2D spectrum, lattice peak detection, period with
// envelope-limited uncertainty, fringe angle, visibility and the
// rotation/accordion summary metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "dynlattice/interference.hpp"

namespace dynlattice {

/// Unnormalized 2D DFT of a frame in natural (unshifted) bin order.
/// Row index is the y frequency, column index the x frequency.
struct Spectrum {
  GridSpec grid;
  std::vector<std::complex<double>> coeffs;

  std::size_t n() const { return grid.n; }
  double step() const { return 1.0 / grid.extent; }  // cycles/m per bin

  /// Signed bin number of index `i`.
  double signed_bin(std::size_t i) const {
    const auto n = static_cast<long long>(grid.n);
    const auto k = static_cast<long long>(i);
    return static_cast<double>(k < (n + 1) / 2 ? k : k - n);
  }
  double frequency(std::size_t i) const { return signed_bin(i) * step(); }

  double magnitude(std::size_t row, std::size_t col) const { return std::abs(coeffs[row * grid.n + col]); }
};

inline Spectrum spectrum(const IntensityFrame& frame) {
  const std::size_t n = frame.grid.n;
  Spectrum out{frame.grid, std::vector<std::complex<double>>(n * n)};
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(n), tmp(n);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) in[col] = frame.at(row, col);
    fft.fwd(tmp, in);
    std::copy(tmp.begin(), tmp.end(), out.coeffs.begin() + static_cast<std::ptrdiff_t>(row * n));
  }
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) in[row] = out.coeffs[row * n + col];
    fft.fwd(tmp, in);
    for (std::size_t row = 0; row < n; ++row) out.coeffs[row * n + col] = tmp[row];
  }
  return out;
}

struct Peak {
  double kx = 0.0;         // cycles/m
  double ky = 0.0;         // cycles/m
  double magnitude = 0.0;  // fitted peak height
  double width = 0.0;      // 1/e half-width of the magnitude, cycles/m

  double radius() const { return std::hypot(kx, ky); }
};

using PeakSet = std::vector<Peak>;

namespace detail {

inline std::size_t wrap_index(long long i, std::size_t n) {
  const auto m = static_cast<long long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

struct GaussianFit {
  double du = 0.0, dv = 0.0;  // centre offset in bins
  double width = 0.0;         // bins
  double height = 0.0;
  bool ok = false;
};

/// Isotropic Gaussian through the 3x3 neighbourhood of bin (row, col):
/// ln M = c + a u + b v + e (u^2 + v^2), solved by linear least squares.
inline GaussianFit fit_gaussian_3x3(const Spectrum& spec, std::size_t row, std::size_t col) {
  Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
  Eigen::Vector4d atb = Eigen::Vector4d::Zero();
  for (int dv = -1; dv <= 1; ++dv) {
    for (int du = -1; du <= 1; ++du) {
      const double m = spec.magnitude(wrap_index(static_cast<long long>(row) + dv, spec.n()),
                                      wrap_index(static_cast<long long>(col) + du, spec.n()));
      if (!(m > 0.0)) return {};
      const Eigen::Vector4d basis(1.0, du, dv, du * du + dv * dv);
      ata += basis * basis.transpose();
      atb += basis * std::log(m);
    }
  }
  const Eigen::Vector4d c = ata.ldlt().solve(atb);
  if (!(c(3) < 0.0)) return {};
  GaussianFit fit;
  fit.width = std::sqrt(-1.0 / c(3));
  fit.du = -c(1) / (2.0 * c(3));
  fit.dv = -c(2) / (2.0 * c(3));
  if (std::abs(fit.du) > 1.0 || std::abs(fit.dv) > 1.0) return {};
  fit.height = std::exp(c(0) - (c(1) * c(1) + c(2) * c(2)) / (4.0 * c(3)));
  fit.ok = true;
  return fit;
}

/// Magnitude-weighted centroid over the 3x3 neighbourhood; used when the
/// log fit is undefined (zero bins around an unbroadened peak).
inline GaussianFit centroid_3x3(const Spectrum& spec, std::size_t row, std::size_t col) {
  double sum = 0.0, su = 0.0, sv = 0.0;
  for (int dv = -1; dv <= 1; ++dv) {
    for (int du = -1; du <= 1; ++du) {
      const double m = spec.magnitude(wrap_index(static_cast<long long>(row) + dv, spec.n()),
                                      wrap_index(static_cast<long long>(col) + du, spec.n()));
      sum += m;
      su += m * du;
      sv += m * dv;
    }
  }
  GaussianFit fit;
  fit.du = su / sum;
  fit.dv = sv / sum;
  fit.width = 0.5;
  fit.height = spec.magnitude(row, col);
  fit.ok = true;
  return fit;
}

inline GaussianFit refine_peak(const Spectrum& spec, std::size_t row, std::size_t col) {
  GaussianFit fit = fit_gaussian_3x3(spec, row, col);
  return fit.ok ? fit : centroid_3x3(spec, row, col);
}

}  // namespace detail

/// 1/e half-width of the DC lobe in cycles/m, i.e. the spectral width of the
/// frame's envelope. Falls back to one bin when the lobe is unresolved.
inline double envelope_spectral_width(const Spectrum& spec) {
  const auto fit = detail::fit_gaussian_3x3(spec, 0, 0);
  const double bins = fit.ok ? fit.width : 1.0;
  return bins * spec.step();
}

/// Default DC exclusion radius: three envelope widths, at least 1.5 bins.
inline double default_exclusion_radius(const Spectrum& spec) {
  return std::max(3.0 * envelope_spectral_width(spec), 1.5 * spec.step());
}

/// Non-DC lattice peaks, one per conjugate pair, strongest first.
///
/// A bin qualifies when it is a 3x3 local maximum outside the exclusion
/// radius and exceeds five times the RMS magnitude of the masked spectrum.
/// Weaker maxima within the exclusion radius of a stronger peak are treated
/// as its sidelobes. Centre and width come from an isotropic Gaussian fit of
/// the log magnitude over the 3x3 neighbourhood.
inline PeakSet find_peaks(const Spectrum& spec, double exclusion_radius) {
  const std::size_t n = spec.n();
  auto outside = [&](std::size_t row, std::size_t col) {
    return std::hypot(spec.frequency(col), spec.frequency(row)) >= exclusion_radius;
  };

  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n; ++col)
      if (outside(row, col)) {
        const double m = spec.magnitude(row, col);
        sum_sq += m * m;
        ++count;
      }
  if (count == 0) fail(ErrorCode::NoLattice, "exclusion radius masks the whole spectrum");
  const double threshold = 5.0 * std::sqrt(sum_sq / static_cast<double>(count));

  struct Candidate {
    std::size_t row, col;
    double m;
  };
  std::vector<Candidate> cands;
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      if (!outside(row, col)) continue;
      const double bx = spec.signed_bin(col);
      const double by = spec.signed_bin(row);
      // Canonical half plane; the conjugate bin carries the same magnitude.
      if (!(bx > 0.0 || (bx == 0.0 && by > 0.0))) continue;
      const double m = spec.magnitude(row, col);
      if (!(m > threshold)) continue;
      bool is_max = true;
      for (int dv = -1; dv <= 1 && is_max; ++dv)
        for (int du = -1; du <= 1; ++du) {
          if (du == 0 && dv == 0) continue;
          const std::size_t r2 = detail::wrap_index(static_cast<long long>(row) + dv, n);
          const std::size_t c2 = detail::wrap_index(static_cast<long long>(col) + du, n);
          const double m2 = spec.magnitude(r2, c2);
          // Ties go to the earlier bin in scan order.
          const bool earlier = (r2 * n + c2) < (row * n + col);
          if (m2 > m || (m2 == m && earlier)) {
            is_max = false;
            break;
          }
        }
      if (is_max) cands.push_back({row, col, m});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.m > b.m; });

  PeakSet peaks;
  for (const auto& c : cands) {
    const auto fit = detail::refine_peak(spec, c.row, c.col);
    Peak p;
    p.kx = (spec.signed_bin(c.col) + fit.du) * spec.step();
    p.ky = (spec.signed_bin(c.row) + fit.dv) * spec.step();
    p.magnitude = fit.height;
    p.width = fit.width * spec.step();
    bool sidelobe = false;
    for (const auto& q : peaks)
      if (std::hypot(p.kx - q.kx, p.ky - q.ky) < exclusion_radius ||
          std::hypot(p.kx + q.kx, p.ky + q.ky) < exclusion_radius) {
        sidelobe = true;
        break;
      }
    if (!sidelobe) peaks.push_back(p);
  }
  if (peaks.empty()) fail(ErrorCode::NoLattice, "no lattice peak above the spectral background");
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  return peaks;
}

struct PeriodEstimate {
  double period = 0.0;       // m
  double uncertainty = 0.0;  // m
  double angle = 0.0;        // rad, direction of the fringe wavevector in (-pi/2, pi/2]
};

/// d = 1/|k|, with the peak width propagated as dd = d * width / |k|.
inline PeriodEstimate estimate_period(const PeakSet& peaks) {
  if (peaks.empty()) fail(ErrorCode::NoLattice, "no lattice peak to estimate a period from");
  const Peak& p = peaks.front();
  const double k = p.radius();
  PeriodEstimate out;
  out.period = 1.0 / k;
  out.uncertainty = out.period * p.width / k;
  out.angle = std::atan2(p.ky, p.kx);
  return out;
}

/// Focal-plane 1/e^2 radius corresponding to a spectral 1/e half-width.
inline double waist_from_spectral_width(double width) { return std::sqrt(2.0) / (kPi * width); }

/// Fringe visibility (I_max - I_min) / (I_max + I_min) over the central
/// region |r| < w/2. The Gaussian envelope is divided out and
/// A + B cos(k.r) + C sin(k.r) is fitted at the expected wavevector, giving
/// V = sqrt(B^2 + C^2) / A. Without a waist the envelope is estimated from
/// the DC lobe; a non-finite waist means the frame has no envelope.
inline double visibility(const IntensityFrame& frame, double expected_period, double expected_angle,
                         std::optional<double> envelope_waist = std::nullopt) {
  if (!(expected_period > 0.0)) fail(ErrorCode::InvalidInput, "expected period must be positive");
  if (frame.grid.pitch() > expected_period / 2.0)
    fail(ErrorCode::Sampling, "expected period is not resolvable on this grid");

  double waist = 0.0;
  if (envelope_waist) {
    waist = *envelope_waist;
  } else {
    const Spectrum spec = spectrum(frame);
    const auto fit = detail::fit_gaussian_3x3(spec, 0, 0);
    waist = fit.ok ? waist_from_spectral_width(fit.width * spec.step()) : INFINITY;
  }
  const bool has_envelope = std::isfinite(waist) && waist > 0.0;
  const double radius = has_envelope ? waist / 2.0 : frame.grid.extent / 4.0;

  const double k = kTwoPi / expected_period;
  const double kx = k * std::cos(expected_angle);
  const double ky = k * std::sin(expected_angle);
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (std::size_t row = 0; row < frame.grid.n; ++row) {
    const double y = frame.grid.coord(row);
    for (std::size_t col = 0; col < frame.grid.n; ++col) {
      const double x = frame.grid.coord(col);
      const double r2 = x * x + y * y;
      if (r2 >= radius * radius) continue;
      const double env = has_envelope ? detail::gaussian_envelope(r2, waist) : 1.0;
      const double g = frame.at(row, col) / env;
      const double phase = kx * x + ky * y;
      const Eigen::Vector3d basis(1.0, std::cos(phase), std::sin(phase));
      ata += basis * basis.transpose();
      atb += basis * g;
    }
  }
  const Eigen::Vector3d c = ata.ldlt().solve(atb);
  if (!(c(0) > 0.0)) return 0.0;
  return std::clamp(std::hypot(c(1), c(2)) / c(0), 0.0, 1.0);
}

struct AnalysisReport {
  double period = 0.0;
  double period_uncertainty = 0.0;
  double fringe_angle = 0.0;
  double visibility = 0.0;
  double frame_time = 0.0;
};

struct AnalysisOptions {
  std::optional<double> exclusion_radius;  // cycles/m; default from the DC lobe
  std::optional<double> envelope_waist;    // m; see visibility()
};

inline AnalysisReport analyze_frame(const IntensityFrame& frame, const AnalysisOptions& options = {}) {
  frame.grid.validate();
  const Spectrum spec = spectrum(frame);
  const double exclusion = options.exclusion_radius.value_or(default_exclusion_radius(spec));
  const PeriodEstimate est = estimate_period(find_peaks(spec, exclusion));
  AnalysisReport r;
  r.period = est.period;
  r.period_uncertainty = est.uncertainty;
  r.fringe_angle = est.angle;
  r.frame_time = frame.time;
  std::optional<double> waist = options.envelope_waist;
  if (!waist) waist = waist_from_spectral_width(envelope_spectral_width(spec));
  r.visibility = visibility(frame, est.period, est.angle, waist);
  return r;
}

/// Wraps an angle difference into (-pi/2, pi/2].
inline double wrap_half_turn(double a) {
  double w = std::remainder(a, kPi);
  if (w <= -kPi / 2.0) w += kPi;
  return w;
}

struct ConstancyResult {
  double mean_period = 0.0;
  double max_relative_deviation = 0.0;
  double mean_relative_uncertainty = 0.0;
  // Largest deviation of (measured angle - schedule angle) from its mean,
  // modulo pi. Only set when schedule angles were supplied.
  std::optional<double> max_angle_error;
  bool constant = false;  // deviation within the mean relative uncertainty
};

inline ConstancyResult period_constancy(std::span<const AnalysisReport> reports,
                                        std::span<const double> schedule_angles = {}) {
  if (reports.size() < 2) fail(ErrorCode::InvalidInput, "period constancy needs at least two reports");
  if (!schedule_angles.empty() && schedule_angles.size() != reports.size())
    fail(ErrorCode::InvalidInput, "one schedule angle per report is required");
  ConstancyResult out;
  for (const auto& r : reports) {
    out.mean_period += r.period;
    out.mean_relative_uncertainty += r.period_uncertainty / r.period;
  }
  out.mean_period /= static_cast<double>(reports.size());
  out.mean_relative_uncertainty /= static_cast<double>(reports.size());
  for (const auto& r : reports)
    out.max_relative_deviation = std::max(out.max_relative_deviation,
                                          std::abs(r.period - out.mean_period) / out.mean_period);
  out.constant = out.max_relative_deviation <= out.mean_relative_uncertainty;

  if (!schedule_angles.empty()) {
    // Mean offset on the doubled-angle circle handles the mod-pi wrap.
    double cs = 0.0, sn = 0.0;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const double d = wrap_half_turn(reports[i].fringe_angle - schedule_angles[i]);
      diffs.push_back(d);
      cs += std::cos(2.0 * d);
      sn += std::sin(2.0 * d);
    }
    const double offset = 0.5 * std::atan2(sn, cs);
    double worst = 0.0;
    for (double d : diffs) worst = std::max(worst, std::abs(wrap_half_turn(d - offset)));
    out.max_angle_error = worst;
  }
  return out;
}

/// (V_max - V_min) / (V_max + V_min) over a rotation cycle.
inline double depth_modulation(std::span<const double> visibilities) {
  if (visibilities.empty()) fail(ErrorCode::InvalidInput, "depth modulation needs at least one frame");
  const auto [lo, hi] = std::minmax_element(visibilities.begin(), visibilities.end());
  if (*hi + *lo == 0.0) return 0.0;
  return (*hi - *lo) / (*hi + *lo);
}

}  // namespace dynlattice
