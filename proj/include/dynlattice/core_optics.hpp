// Geometric and Gaussian-beam primitives for lattices formed in the back
// focal plane of a lens: wavevectors, lattice spacing formulas,
// polarization transport through the lens, ABCD propagation, coherence.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "dynlattice/error.hpp"

namespace dynlattice {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Jones = Eigen::Vector2cd;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct WaveSpec {
  double wavelength = 830e-9;  // m
  double detuning = 0.0;       // Hz, relative to the reference laser frequency

  double wavenumber() const { return kTwoPi / wavelength; }

  void validate() const {
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
      fail(ErrorCode::InvalidInput, "wavelength must be positive");
    if (!std::isfinite(detuning))
      fail(ErrorCode::InvalidInput, "detuning must be finite");
  }
};

enum class LensKind { ThinLens, SineCondition };

struct LensModel {
  LensKind kind = LensKind::SineCondition;
  double focal_length = 0.25;       // m
  double numerical_aperture = 0.1;  // (0, 1]

  void validate() const {
    if (!(focal_length > 0.0) || !std::isfinite(focal_length))
      fail(ErrorCode::InvalidInput, "focal length must be positive");
    if (!(numerical_aperture > 0.0 && numerical_aperture <= 1.0))
      fail(ErrorCode::InvalidInput, "numerical aperture must lie in (0, 1]");
  }
};

/// Direction of the ray leaving the lens for a beam entering at a given
/// front-focal-plane position: polar angle theta to the axis and azimuth of
/// the entry point.
struct RayAngle {
  double sin_theta = 0.0;
  double cos_theta = 1.0;
  double azimuth = 0.0;

  double theta() const { return std::atan2(sin_theta, cos_theta); }
};

namespace detail {
// Slack for positions that sit exactly on the aperture edge after rounding.
inline constexpr double kApertureSlack = 1e-12;
}

/// Refraction angle of a beam entering at `pos`. Throws on aperture
/// violations; a sine-condition height above F is impossible geometry.
inline RayAngle ray_angle(const LensModel& lens, const Vec2& pos) {
  const double r = pos.norm();
  const double f = lens.focal_length;
  RayAngle out;
  out.azimuth = (r > 0.0) ? std::atan2(pos.y(), pos.x()) : 0.0;
  if (lens.kind == LensKind::ThinLens) {
    const double hyp = std::hypot(r, f);
    out.sin_theta = r / hyp;
    out.cos_theta = f / hyp;
  } else {
    const double s = r / f;
    if (s > 1.0 + detail::kApertureSlack)
      fail(ErrorCode::ImpossibleGeometry,
           "sine-condition lens cannot accept r/F = " + std::to_string(s) + " > 1");
    out.sin_theta = std::min(s, 1.0);
    out.cos_theta = std::sqrt(std::max(0.0, 1.0 - out.sin_theta * out.sin_theta));
  }
  if (out.sin_theta > lens.numerical_aperture * (1.0 + detail::kApertureSlack))
    fail(ErrorCode::Aperture, "beam at r = " + std::to_string(r) +
                                  " m lies outside the lens aperture (sin theta = " +
                                  std::to_string(out.sin_theta) + " > NA = " +
                                  std::to_string(lens.numerical_aperture) + ")");
  return out;
}

/// Wavevector behind the lens for a beam entering at `pos`. The
/// sine-condition form keeps the transverse part (2pi/lambda)(-x, -y)/F and
/// sets k_z so that |k| = 2pi/lambda.
inline Vec3 wavevector(const LensModel& lens, const WaveSpec& wave, const Vec2& pos) {
  const RayAngle ray = ray_angle(lens, pos);
  const double k = wave.wavenumber();
  const double r = pos.norm();
  if (r == 0.0) return {0.0, 0.0, k};
  const Vec2 inward = -pos / r;
  return {k * ray.sin_theta * inward.x(), k * ray.sin_theta * inward.y(), k * ray.cos_theta};
}

/// Half of the crossing angle of two beams separated by `separation` and
/// placed symmetrically about the axis.
inline double intersection_half_angle(const LensModel& lens, double separation) {
  if (!(separation >= 0.0)) fail(ErrorCode::InvalidInput, "beam separation must be >= 0");
  const double half = separation / 2.0;
  const RayAngle ray = ray_angle(lens, Vec2(half, 0.0));
  if (lens.kind == LensKind::ThinLens) return std::atan2(half, lens.focal_length);
  return std::asin(ray.sin_theta);
}

inline double period_from_angle(const WaveSpec& wave, double half_angle) {
  if (half_angle == 0.0)
    fail(ErrorCode::InfinitePeriod, "zero crossing angle gives an infinite period");
  if (!(half_angle > 0.0 && half_angle <= kPi / 2.0))
    fail(ErrorCode::InvalidInput, "half angle must lie in (0, pi/2]");
  return wave.wavelength / (2.0 * std::sin(half_angle));
}

/// d = lambda F / D. Exact for a sine-condition lens.
inline double period_paraxial(const WaveSpec& wave, double focal_length, double separation) {
  if (!(focal_length > 0.0)) fail(ErrorCode::InvalidInput, "focal length must be positive");
  if (separation == 0.0)
    fail(ErrorCode::InfinitePeriod, "zero beam separation gives an infinite period");
  if (!(separation > 0.0)) fail(ErrorCode::InvalidInput, "beam separation must be positive");
  return wave.wavelength * focal_length / separation;
}

/// Inverse of period_paraxial: separation needed for a target period.
inline double separation_for_period(const WaveSpec& wave, double focal_length, double period) {
  if (!(period > 0.0)) fail(ErrorCode::InvalidInput, "period must be positive");
  return wave.wavelength * focal_length / period;
}

inline double min_period(const WaveSpec& wave, double numerical_aperture) {
  if (!(numerical_aperture > 0.0 && numerical_aperture <= 1.0))
    fail(ErrorCode::InvalidInput, "numerical aperture must lie in (0, 1]");
  return wave.wavelength / (2.0 * numerical_aperture);
}

inline Jones jones_linear(double angle) {
  return Jones(std::complex<double>(std::cos(angle), 0.0),
               std::complex<double>(std::sin(angle), 0.0));
}

/// Circular Jones vector (1, +-i)/sqrt(2). Both beams of a pair use the same
/// lab-frame vector.
inline Jones jones_circular(bool left_handed = true) {
  const double s = 1.0 / std::sqrt(2.0);
  return Jones(std::complex<double>(s, 0.0),
               std::complex<double>(0.0, left_handed ? s : -s));
}

/// Meridional transport of a lab-frame Jones vector through the lens: the
/// azimuthal (s) component is unchanged, the radial (p) component tilts by
/// theta so the field stays transverse to the refracted wavevector.
inline CVec3 polarization_transport(const LensModel& lens, const Vec2& pos, const Jones& jones) {
  const RayAngle ray = ray_angle(lens, pos);
  const double ca = std::cos(ray.azimuth);
  const double sa = std::sin(ray.azimuth);
  const std::complex<double> p = jones(0) * ca + jones(1) * sa;
  const std::complex<double> s = -jones(0) * sa + jones(1) * ca;
  const Vec3 radial_out(ray.cos_theta * ca, ray.cos_theta * sa, ray.sin_theta);
  const Vec3 azimuthal(-sa, ca, 0.0);
  return s * azimuthal.cast<std::complex<double>>() + p * radial_out.cast<std::complex<double>>();
}

/// One steered Gaussian beam. `waist` is the 1/e^2 intensity radius of the
/// focused spot in the back focal plane.
struct BeamSpec {
  Vec2 position = Vec2::Zero();
  double amplitude = 1.0;
  double waist = 0.93e-3;
  Jones polarization = jones_linear(0.0);
  double detuning = 0.0;

  double intensity() const { return amplitude * amplitude; }

  BeamSpec mirrored() const {
    BeamSpec out = *this;
    out.position = -position;
    return out;
  }

  void validate() const {
    if (!(waist > 0.0)) fail(ErrorCode::InvalidInput, "beam waist must be positive");
    if (!std::isfinite(amplitude)) fail(ErrorCode::InvalidInput, "beam amplitude must be finite");
    if (std::abs(polarization.norm() - 1.0) > 1e-12)
      fail(ErrorCode::InvalidInput, "polarization Jones vector must have unit norm");
  }

  void validate(const LensModel& lens) const {
    validate();
    (void)ray_angle(lens, position);
  }
};

// ---------------------------------------------------------------------------
// Gaussian beams and paraxial ray-transfer matrices.

class ComplexBeamParameter {
 public:
  explicit ComplexBeamParameter(std::complex<double> q) : q_(q) {
    if (!(q.imag() > 0.0))
      fail(ErrorCode::InvalidInput, "complex beam parameter needs Im(q) > 0");
  }

  /// Beam with waist radius `w0` located `z_from_waist` upstream of the
  /// reference plane.
  static ComplexBeamParameter from_waist(double w0, double wavelength, double z_from_waist = 0.0) {
    return ComplexBeamParameter({z_from_waist, kPi * w0 * w0 / wavelength});
  }

  std::complex<double> value() const { return q_; }
  double distance_from_waist() const { return q_.real(); }
  double rayleigh_range() const { return q_.imag(); }
  double waist(double wavelength) const { return std::sqrt(rayleigh_range() * wavelength / kPi); }

  /// 1/e^2 radius at the reference plane.
  double spot_radius(double wavelength) const {
    const double inv_imag = (1.0 / q_).imag();
    return std::sqrt(-wavelength / (kPi * inv_imag));
  }

 private:
  std::complex<double> q_;
};

struct RayTransferMatrix {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static RayTransferMatrix free_space(double length) { return {1.0, length, 0.0, 1.0}; }
  static RayTransferMatrix thin_lens(double focal_length) {
    if (focal_length == 0.0) fail(ErrorCode::InvalidInput, "lens focal length must be nonzero");
    return {1.0, 0.0, -1.0 / focal_length, 1.0};
  }

  double determinant() const { return a * d - b * c; }

  void validate() const {
    const double scale = std::max({1.0, std::abs(a * d), std::abs(b * c)});
    if (std::abs(determinant() - 1.0) > 1e-12 * scale)
      fail(ErrorCode::InvalidInput, "ray-transfer matrix must have unit determinant");
  }

  /// Matrix product; `(*this) * rhs` applies `rhs` first.
  RayTransferMatrix operator*(const RayTransferMatrix& rhs) const {
    return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d,
            c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
  }
};

inline ComplexBeamParameter abcd_propagate(const ComplexBeamParameter& q, const RayTransferMatrix& m) {
  m.validate();
  const std::complex<double> den = m.c * q.value() + m.d;
  if (std::abs(den) <= 1e-300)
    fail(ErrorCode::FocalSingularity, "c q + d vanishes: output plane is singular");
  return ComplexBeamParameter((m.a * q.value() + m.b) / den);
}

/// free(f) lens(f) free(2f) lens(f) free(f): the one-to-one telescope in the
/// long interferometer arm.
inline RayTransferMatrix four_f_relay(double focal_length) {
  using M = RayTransferMatrix;
  return M::free_space(focal_length) * M::thin_lens(focal_length) * M::free_space(2.0 * focal_length) *
         M::thin_lens(focal_length) * M::free_space(focal_length);
}

/// Extra optical path of the long arm relative to the short arm.
inline double four_f_extra_path(double focal_length) { return 4.0 * focal_length; }

enum class CoherenceStatus { Ok, Marginal, Fail };

constexpr const char* to_string(CoherenceStatus s) {
  switch (s) {
    case CoherenceStatus::Ok: return "ok";
    case CoherenceStatus::Marginal: return "marginal";
    case CoherenceStatus::Fail: return "fail";
  }
  return "unknown";
}

struct CoherenceMargin {
  CoherenceStatus status = CoherenceStatus::Ok;
  double ratio = 0.0;
};

/// ok below 10% of the coherence length, marginal below 100%.
inline CoherenceMargin coherence_margin(double path_difference, double coherence_length) {
  if (!(path_difference >= 0.0) || !(coherence_length >= 0.0))
    fail(ErrorCode::InvalidInput, "path difference and coherence length must be >= 0");
  if (coherence_length == 0.0) fail(ErrorCode::InvalidInput, "coherence length must be positive");
  CoherenceMargin out;
  out.ratio = path_difference / coherence_length;
  if (out.ratio < 0.1)
    out.status = CoherenceStatus::Ok;
  else if (out.ratio < 1.0)
    out.status = CoherenceStatus::Marginal;
  else
    out.status = CoherenceStatus::Fail;
  return out;
}

}  // namespace dynlattice
