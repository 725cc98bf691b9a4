// Back-focal-plane intensity synthesis for mirrored beam pairs.
//
// Intensities are optical-cycle averages in units of I0 = amplitude^2 of a
// single beam, so the fast (k1 + k2) travelling term never appears. Each beam
// carries a Gaussian intensity envelope exp(-2 r^2 / w^2) centred on the
// axis, where w is the focal-plane spot radius from BeamSpec::waist.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "dynlattice/core_optics.hpp"

namespace dynlattice {

struct GridSpec {
  std::size_t n = 512;
  double extent = 2.3e-3;  // m, side length

  double pitch() const { return extent / static_cast<double>(n); }
  /// Physical coordinate of pixel index `i`; index n/2 sits on the axis.
  double coord(std::size_t i) const { return -extent / 2.0 + static_cast<double>(i) * pitch(); }

  void validate() const {
    if (n < 2) fail(ErrorCode::InvalidInput, "grid needs at least 2 pixels per side");
    if (!(extent > 0.0) || !std::isfinite(extent))
      fail(ErrorCode::InvalidInput, "grid extent must be positive");
  }

  bool operator==(const GridSpec&) const = default;
};

/// n x n intensity samples, row-major with rows along y.
struct IntensityFrame {
  GridSpec grid;
  std::vector<double> values;
  double time = 0.0;

  IntensityFrame() = default;
  explicit IntensityFrame(const GridSpec& g, double t = 0.0)
      : grid(g), values(g.n * g.n, 0.0), time(t) {}

  double& at(std::size_t row, std::size_t col) { return values[row * grid.n + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * grid.n + col]; }

  double max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  /// Integral of intensity over the grid (sum times pixel area).
  double total_power() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * grid.pitch() * grid.pitch();
  }
};

/// A steered beam and its image through the origin, (x2, y2) = -(x1, y1).
struct BeamPair {
  BeamSpec primary;

  BeamSpec secondary() const { return primary.mirrored(); }
};

// Orthogonal pairs are detuned by this much by default; only the coherent
// diagnostic uses it.
inline constexpr double kDefaultPairDetuning = 10e6;

namespace detail {

inline double gaussian_envelope(double r2, double waist) { return std::exp(-2.0 * r2 / (waist * waist)); }

/// Transverse wavevector difference k1 - k2 of a mirrored pair.
inline Vec2 fringe_wavevector(const WaveSpec& wave, const LensModel& lens, const BeamPair& pair) {
  const Vec3 k1 = wavevector(lens, wave, pair.primary.position);
  const Vec3 k2 = wavevector(lens, wave, pair.secondary().position);
  return {k1.x() - k2.x(), k1.y() - k2.y()};
}

inline void check_sampling(const GridSpec& grid, const Vec2& dk) {
  const double kmag = dk.norm();
  if (kmag == 0.0) return;
  const double period = kTwoPi / kmag;
  if (grid.pitch() > period / 4.0)
    fail(ErrorCode::Sampling, "grid pitch " + std::to_string(grid.pitch()) +
                                  " m is coarser than a quarter fringe period (" +
                                  std::to_string(period) + " m)");
}

inline void check_pair(const WaveSpec& wave, const LensModel& lens, const BeamPair& pair, const GridSpec& grid) {
  wave.validate();
  lens.validate();
  grid.validate();
  pair.primary.validate(lens);
}

// Complex field of one beam at the focal plane: sqrt(envelope) * e * exp(i k.r).
struct BeamField {
  Vec2 k_perp;
  CVec3 polarization;
  double amplitude;
  double waist;
  bool envelope;

  CVec3 at(double x, double y) const {
    const double env = envelope ? std::sqrt(gaussian_envelope(x * x + y * y, waist)) : 1.0;
    const double phase = k_perp.x() * x + k_perp.y() * y;
    return (amplitude * env * std::polar(1.0, phase)) * polarization;
  }
};

inline BeamField make_field(const WaveSpec& wave, const LensModel& lens, const BeamSpec& beam, bool envelope) {
  const Vec3 k = wavevector(lens, wave, beam.position);
  return {Vec2(k.x(), k.y()), polarization_transport(lens, beam.position, beam.polarization),
          beam.amplitude, beam.waist, envelope};
}

}  // namespace detail

/// I = 2 I0 [1 + cos((k1 - k2).r)], optionally times the Gaussian envelope.
inline IntensityFrame scalar_fringe_frame(const WaveSpec& wave, const LensModel& lens, const BeamPair& pair,
                                          const GridSpec& grid, bool envelope = true, double time = 0.0) {
  detail::check_pair(wave, lens, pair, grid);
  const Vec2 dk = detail::fringe_wavevector(wave, lens, pair);
  detail::check_sampling(grid, dk);

  IntensityFrame frame(grid, time);
  const double i0 = pair.primary.intensity();
  const double w = pair.primary.waist;
  for (std::size_t row = 0; row < grid.n; ++row) {
    const double y = grid.coord(row);
    for (std::size_t col = 0; col < grid.n; ++col) {
      const double x = grid.coord(col);
      const double env = envelope ? detail::gaussian_envelope(x * x + y * y, w) : 1.0;
      frame.at(row, col) = 2.0 * i0 * (1.0 + std::cos(dk.x() * x + dk.y() * y)) * env;
    }
  }
  return frame;
}

/// Steered beam position for a lattice rotated to angle Omega t.
inline Vec2 rotating_position(double separation, double angle) {
  return {separation / 2.0 * std::cos(angle), separation / 2.0 * std::sin(angle)};
}

/// Scalar fringes of a pair rotated to angle Omega t. `beam` supplies the
/// amplitude, waist and polarization; its position is replaced.
inline IntensityFrame rotating_fringe_frame(const WaveSpec& wave, const LensModel& lens, const BeamSpec& beam,
                                            double separation, double omega, double t, const GridSpec& grid,
                                            bool envelope = true) {
  BeamPair pair{beam};
  pair.primary.position = rotating_position(separation, omega * t);
  return scalar_fringe_frame(wave, lens, pair, grid, envelope, t);
}

/// |E1 + E2|^2 with each field carried through polarization_transport.
inline IntensityFrame vector_fringe_frame(const WaveSpec& wave, const LensModel& lens, const BeamPair& pair,
                                          const GridSpec& grid, bool envelope = true, double time = 0.0) {
  detail::check_pair(wave, lens, pair, grid);
  detail::check_sampling(grid, detail::fringe_wavevector(wave, lens, pair));
  const auto f1 = detail::make_field(wave, lens, pair.primary, envelope);
  const auto f2 = detail::make_field(wave, lens, pair.secondary(), envelope);

  IntensityFrame frame(grid, time);
  for (std::size_t row = 0; row < grid.n; ++row) {
    const double y = grid.coord(row);
    for (std::size_t col = 0; col < grid.n; ++col) {
      const double x = grid.coord(col);
      frame.at(row, col) = (f1.at(x, y) + f2.at(x, y)).squaredNorm();
    }
  }
  return frame;
}

/// Visibility |e1 . e2*| of the fringes from a mirrored pair entering at
/// `pos` and `-pos` with the given lab-frame Jones vectors.
inline double fringe_contrast(const LensModel& lens, const Vec2& pos, const Jones& jones1, const Jones& jones2) {
  lens.validate();
  const CVec3 e1 = polarization_transport(lens, pos, jones1);
  const CVec3 e2 = polarization_transport(lens, Vec2(-pos), jones2);
  // Eigen's dot conjugates the first argument.
  return std::min(1.0, std::abs(e2.dot(e1)));
}

enum class CombineMode { Incoherent, Coherent };

/// Pixelwise sum: the time average of two lattices whose beat note (MHz)
/// is far above any response bandwidth.
inline IntensityFrame combine_incoherent(const IntensityFrame& a, const IntensityFrame& b) {
  if (!(a.grid == b.grid)) fail(ErrorCode::GridMismatch, "frames to combine must share a grid");
  IntensityFrame out(a.grid, a.time);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] + b.values[i];
  return out;
}

/// Two-pair lattice. Incoherent mode sums the two vector frames; coherent
/// mode adds all four fields, with pair B carrying the beat phase
/// exp(-2 pi i detuning t), so the cross terms between pairs show up.
inline IntensityFrame combine_lattices(const WaveSpec& wave, const LensModel& lens, const BeamPair& pair_a,
                                       const BeamPair& pair_b, const GridSpec& grid, CombineMode mode,
                                       double detuning = kDefaultPairDetuning, double t = 0.0,
                                       bool envelope = true) {
  if (mode == CombineMode::Incoherent) {
    return combine_incoherent(vector_fringe_frame(wave, lens, pair_a, grid, envelope, t),
                              vector_fringe_frame(wave, lens, pair_b, grid, envelope, t));
  }
  detail::check_pair(wave, lens, pair_a, grid);
  detail::check_pair(wave, lens, pair_b, grid);
  detail::check_sampling(grid, detail::fringe_wavevector(wave, lens, pair_a));
  detail::check_sampling(grid, detail::fringe_wavevector(wave, lens, pair_b));
  const auto a1 = detail::make_field(wave, lens, pair_a.primary, envelope);
  const auto a2 = detail::make_field(wave, lens, pair_a.secondary(), envelope);
  const auto b1 = detail::make_field(wave, lens, pair_b.primary, envelope);
  const auto b2 = detail::make_field(wave, lens, pair_b.secondary(), envelope);
  const std::complex<double> beat = std::polar(1.0, -kTwoPi * detuning * t);

  IntensityFrame frame(grid, t);
  for (std::size_t row = 0; row < grid.n; ++row) {
    const double y = grid.coord(row);
    for (std::size_t col = 0; col < grid.n; ++col) {
      const double x = grid.coord(col);
      const CVec3 field = a1.at(x, y) + a2.at(x, y) + beat * (b1.at(x, y) + b2.at(x, y));
      frame.at(row, col) = field.squaredNorm();
    }
  }
  return frame;
}

}  // namespace dynlattice
