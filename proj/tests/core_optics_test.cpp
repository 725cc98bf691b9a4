#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dynlattice/core_optics.hpp"
#include "oracles.hpp"

using namespace dynlattice;

namespace {

constexpr double kLambda = 830e-9;

LensModel thin(double f = 0.25, double na = 0.1) { return {LensKind::ThinLens, f, na}; }
LensModel sine(double f = 0.25, double na = 0.1) { return {LensKind::SineCondition, f, na}; }

template <class Fn>
ErrorCode code_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Contract;
}

}  // namespace

TEST(Wavevector, OnAxisThinLens) {
  const Vec3 k = wavevector(thin(), {kLambda}, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(k.x(), 0.0);
  EXPECT_DOUBLE_EQ(k.y(), 0.0);
  EXPECT_NEAR(k.z(), kTwoPi / kLambda, 1e-9);
}

TEST(Wavevector, ThinLensAtFocalDistanceIs45Degrees) {
  const double f = 0.25;
  const Vec3 k = wavevector(thin(f, 1.0), {kLambda}, {f, 0.0});
  const double k0 = kTwoPi / kLambda;
  EXPECT_NEAR(k.x(), -k0 / std::sqrt(2.0), 1e-9 * k0);
  EXPECT_NEAR(k.y(), 0.0, 1e-9 * k0);
  EXPECT_NEAR(k.z(), k0 / std::sqrt(2.0), 1e-9 * k0);
}

TEST(Wavevector, SineConditionHalfFocalLengthGives30Degrees) {
  const auto ray = ray_angle(sine(0.25, 0.9), {0.125, 0.0});
  EXPECT_NEAR(ray.sin_theta, 0.5, 1e-15);
  EXPECT_NEAR(ray.theta(), kPi / 6.0, 1e-14);
  const Vec3 k = wavevector(sine(0.25, 0.9), {kLambda}, {0.125, 0.0});
  EXPECT_NEAR(k.x(), -0.5 * kTwoPi / kLambda, 1e-6);
}

TEST(Wavevector, MagnitudeIsWavenumberEverywhereInAperture) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& lens : {thin(0.25, 0.7), sine(0.25, 0.7)}) {
    for (int i = 0; i < 500; ++i) {
      Vec2 p(u(rng), u(rng));
      p *= 0.7 * 0.25 * 0.99 / std::max(1.0, p.norm());
      try {
        const Vec3 k = wavevector(lens, {kLambda}, p);
        EXPECT_NEAR(k.norm() / (kTwoPi / kLambda), 1.0, 1e-12);
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Aperture);
      }
    }
  }
}

TEST(Wavevector, ApertureAndGeometryErrors) {
  EXPECT_EQ(code_of([] { wavevector(sine(0.25, 0.1), {kLambda}, {0.03, 0.0}); }), ErrorCode::Aperture);
  EXPECT_EQ(code_of([] { wavevector(thin(0.25, 0.1), {kLambda}, {0.03, 0.0}); }), ErrorCode::Aperture);
  EXPECT_EQ(code_of([] { wavevector(sine(0.25, 1.0), {kLambda}, {0.3, 0.0}); }), ErrorCode::ImpossibleGeometry);
}

TEST(IntersectionHalfAngle, Examples) {
  EXPECT_EQ(intersection_half_angle(thin(), 0.0), 0.0);
  const double theta = intersection_half_angle(thin(), 2.0e-3);
  EXPECT_NEAR(theta, 4.000e-3, 5e-7);
  EXPECT_DOUBLE_EQ(theta, std::atan(0.001 / 0.25));
  const double deg = intersection_half_angle(sine(0.25, 0.7), 2 * 0.7 * 0.25) * 180.0 / kPi;
  EXPECT_NEAR(deg, 44.43, 0.005);
}

TEST(PeriodFromAngle, Examples) {
  const WaveSpec w{kLambda};
  EXPECT_NEAR(period_from_angle(w, kPi / 6.0), 830e-9, 1e-20);
  EXPECT_NEAR(period_from_angle(w, kPi / 2.0), 415e-9, 1e-20);
  EXPECT_NEAR(period_from_angle(w, 4.000e-3), 103.75e-6, 0.001e-6);
  EXPECT_EQ(code_of([&] { period_from_angle(w, 0.0); }), ErrorCode::InfinitePeriod);
  EXPECT_EQ(code_of([&] { period_from_angle(w, 2.0); }), ErrorCode::InvalidInput);
}

TEST(PeriodParaxial, Examples) {
  const WaveSpec w{kLambda};
  EXPECT_NEAR(period_paraxial(w, 0.25, 2.0e-3), 103.75e-6, 1e-15);
  EXPECT_NEAR(period_paraxial(w, 0.25, 1.584e-3), 131.0e-6, 0.05e-6);
  EXPECT_NEAR(period_paraxial(w, 0.25, 4.0e-3), period_paraxial(w, 0.25, 2.0e-3) / 2.0, 1e-18);
  EXPECT_EQ(code_of([&] { period_paraxial(w, 0.25, 0.0); }), ErrorCode::InfinitePeriod);
  EXPECT_NEAR(separation_for_period(w, 0.25, 131e-6), 1.584e-3, 1e-6);
}

TEST(MinPeriod, Examples) {
  EXPECT_NEAR(min_period({kLambda}, 0.7), 592.857e-9, 0.001e-9);
  EXPECT_DOUBLE_EQ(min_period({kLambda}, 0.5), kLambda);
  EXPECT_DOUBLE_EQ(min_period({532e-9}, 0.5), 532e-9);
  EXPECT_NEAR(min_period({kLambda}, 0.27), 1.537e-6, 0.001e-6);
  EXPECT_DOUBLE_EQ(min_period({kLambda}, 1.0), kLambda / 2.0);
  EXPECT_EQ(code_of([] { min_period({kLambda}, 0.0); }), ErrorCode::InvalidInput);
  EXPECT_EQ(code_of([] { min_period({kLambda}, 1.2); }), ErrorCode::InvalidInput);
}

TEST(SineCondition, PeriodIsExactAcrossTheAperture) {
  std::mt19937_64 rng(11);
  const LensModel lens = sine(0.25, 0.7);
  std::uniform_real_distribution<double> dist(1e-5, 2 * 0.7 * 0.25);
  for (int i = 0; i < 100; ++i) {
    const double d_sep = dist(rng);
    const double d = period_from_angle({kLambda}, intersection_half_angle(lens, d_sep));
    const double ref = kLambda * 0.25 / d_sep;
    EXPECT_NEAR(d / ref, 1.0, 1e-12);
  }
}

TEST(ThinLens, PeriodDeviationBoundedBySquaredAperture) {
  const LensModel lens = thin(0.25, 0.7);
  for (double ratio = 0.001; ratio <= 0.2; ratio += 0.001) {
    const double d_sep = 2 * ratio * 0.25;
    const double d = period_from_angle({kLambda}, intersection_half_angle(lens, d_sep));
    const double ref = period_paraxial({kLambda}, 0.25, d_sep);
    EXPECT_LE(std::abs(d - ref) / ref, ratio * ratio);
  }
}

TEST(PolarizationTransport, OnAxisKeepsJones) {
  const Jones j = jones_circular();
  const CVec3 e = polarization_transport(sine(), {0, 0}, j);
  EXPECT_NEAR(std::abs(e(0) - j(0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e(1) - j(1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e(2)), 0.0, 1e-15);
}

TEST(PolarizationTransport, PureP) {
  const LensModel lens = sine(1.0, 0.9);
  const double theta = 0.4;
  const CVec3 e = polarization_transport(lens, {std::sin(theta), 0.0}, jones_linear(0.0));
  EXPECT_NEAR(e(0).real(), std::cos(theta), 1e-15);
  EXPECT_NEAR(std::abs(e(1)), 0.0, 1e-15);
  EXPECT_NEAR(e(2).real(), std::sin(theta), 1e-15);
}

TEST(PolarizationTransport, PureS) {
  const LensModel lens = sine(1.0, 0.9);
  for (double theta : {0.1, 0.5, 1.0}) {
    const CVec3 e = polarization_transport(lens, {0.0, std::sin(theta)}, jones_linear(0.0));
    EXPECT_NEAR(e(0).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(e(1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e(2)), 0.0, 1e-15);
  }
}

TEST(PolarizationTransport, TransverseUnitAndMatchesRotationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const WaveSpec w{kLambda};
  for (const auto& lens : {thin(0.25, 0.9), sine(0.25, 0.9)}) {
    for (int i = 0; i < 300; ++i) {
      Vec2 p(u(rng), u(rng));
      p *= 0.15;
      Jones j(std::complex<double>(u(rng), u(rng)), std::complex<double>(u(rng), u(rng)));
      j.normalize();
      const CVec3 e = polarization_transport(lens, p, j);
      const Vec3 khat = wavevector(lens, w, p).normalized();
      EXPECT_LT(std::abs(e.dot(khat.cast<std::complex<double>>())), 1e-12);
      EXPECT_NEAR(e.norm(), 1.0, 1e-12);
      const auto ray = ray_angle(lens, p);
      const auto ref = oracle::rotated_field(ray.theta(), ray.azimuth, j);
      EXPECT_LT((e - ref).norm(), 1e-12);
    }
  }
}

TEST(BeamSpec, Validation) {
  BeamSpec b;
  EXPECT_NO_THROW(b.validate());
  b.waist = 0.0;
  EXPECT_EQ(code_of([&] { b.validate(); }), ErrorCode::InvalidInput);
  b.waist = 1e-3;
  b.polarization = Jones(1.0, 1.0);
  EXPECT_EQ(code_of([&] { b.validate(); }), ErrorCode::InvalidInput);
  b.polarization = jones_linear(0.3);
  b.position = {0.1, 0.0};
  EXPECT_EQ(code_of([&] { b.validate(sine()); }), ErrorCode::Aperture);
  EXPECT_EQ(b.mirrored().position, Vec2(-0.1, 0.0));
}

TEST(Abcd, FourFMatrixIsIdentityOnQ) {
  const RayTransferMatrix m{-1, 0, 0, -1};
  for (auto qv : {std::complex<double>(0.0, 1e-3), std::complex<double>(-0.3, 2.0), std::complex<double>(5.0, 1e-6)}) {
    const auto q2 = abcd_propagate(ComplexBeamParameter(qv), m);
    EXPECT_EQ(q2.value(), qv);
  }
}

TEST(Abcd, FreeSpaceAddsLength) {
  const ComplexBeamParameter q(std::complex<double>(0.1, 0.5));
  const auto q2 = abcd_propagate(q, RayTransferMatrix::free_space(0.7));
  EXPECT_NEAR(q2.value().real(), 0.8, 1e-15);
  EXPECT_NEAR(q2.value().imag(), 0.5, 1e-15);
}

TEST(Abcd, FourFRelayComposesToMinusIdentity) {
  const auto m = four_f_relay(0.10);
  EXPECT_NEAR(m.a, -1.0, 1e-12);
  EXPECT_NEAR(m.b, 0.0, 1e-12);
  EXPECT_NEAR(m.c, 0.0, 1e-12);
  EXPECT_NEAR(m.d, -1.0, 1e-12);
  EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(four_f_extra_path(0.10), 0.4);
}

TEST(Abcd, PlusMinusIdentityCascadesPreserveQ) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(1e-4, 3.0), f(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const std::complex<double> qv(re(rng), im(rng));
    const double fl = f(rng);
    const auto relay = four_f_relay(fl);
    const auto twice = relay * four_f_relay(f(rng));
    for (const auto& m : {relay, twice}) {
      const auto out = abcd_propagate(ComplexBeamParameter(qv), m).value();
      EXPECT_LT(std::abs(out - qv) / std::abs(qv), 1e-12);
    }
  }
}

TEST(Abcd, ImaginaryPartStaysPositive) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto m = RayTransferMatrix::free_space(u(rng)) * RayTransferMatrix::thin_lens(0.05 + std::abs(u(rng))) *
                   RayTransferMatrix::free_space(u(rng));
    const ComplexBeamParameter q(std::complex<double>(u(rng), 0.01 + std::abs(u(rng))));
    EXPECT_GT(abcd_propagate(q, m).value().imag(), 0.0);
  }
}

TEST(Abcd, Errors) {
  EXPECT_EQ(code_of([] { ComplexBeamParameter(std::complex<double>(1.0, 0.0)); }), ErrorCode::InvalidInput);
  EXPECT_EQ(code_of([] { RayTransferMatrix{1, 2, 3, 4}.validate(); }), ErrorCode::InvalidInput);
  // A point source in the front focal plane leaves as a plane wave.
  const ComplexBeamParameter q(std::complex<double>(1.0, 1e-310));
  EXPECT_EQ(code_of([&] { abcd_propagate(q, RayTransferMatrix::thin_lens(1.0)); }), ErrorCode::FocalSingularity);
}

TEST(Abcd, GaussianBeamQuantities) {
  const double w0 = 1e-3;
  const auto q = ComplexBeamParameter::from_waist(w0, kLambda, 0.0);
  EXPECT_NEAR(q.rayleigh_range(), kPi * w0 * w0 / kLambda, 1e-12);
  EXPECT_NEAR(q.waist(kLambda), w0, 1e-15);
  const auto far = abcd_propagate(q, RayTransferMatrix::free_space(q.rayleigh_range()));
  EXPECT_NEAR(far.spot_radius(kLambda), std::sqrt(2.0) * w0, 1e-12);
}

TEST(Coherence, Examples) {
  auto a = coherence_margin(four_f_extra_path(0.10), 10.0);
  EXPECT_EQ(a.status, CoherenceStatus::Ok);
  EXPECT_NEAR(a.ratio, 0.04, 1e-15);
  auto b = coherence_margin(0.0, 1.0);
  EXPECT_EQ(b.status, CoherenceStatus::Ok);
  EXPECT_EQ(b.ratio, 0.0);
  EXPECT_EQ(coherence_margin(2.0, 1.0).status, CoherenceStatus::Fail);
  EXPECT_EQ(coherence_margin(0.5, 1.0).status, CoherenceStatus::Marginal);
  EXPECT_EQ(code_of([] { coherence_margin(0.1, 0.0); }), ErrorCode::InvalidInput);
  EXPECT_STREQ(to_string(CoherenceStatus::Marginal), "marginal");
}
