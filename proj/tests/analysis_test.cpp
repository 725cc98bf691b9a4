#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dynlattice/analysis.hpp"
#include "oracles.hpp"

using namespace dynlattice;

namespace {

const WaveSpec kWave{830e-9};
const LensModel kLens{LensKind::SineCondition, 0.25, 0.1};
const GridSpec kCameraGrid{512, 2.3e-3};
constexpr double kWaist = 0.93e-3;

IntensityFrame fringe(double separation, double azimuth, const GridSpec& grid = kCameraGrid, double waist = kWaist,
                      bool envelope = true) {
  BeamSpec b;
  b.waist = waist;
  b.position = rotating_position(separation, azimuth);
  return scalar_fringe_frame(kWave, kLens, BeamPair{b}, grid, envelope);
}

AnalysisReport analyze(const IntensityFrame& f, double waist = kWaist) {
  AnalysisOptions o;
  o.envelope_waist = waist;
  return analyze_frame(f, o);
}

// Wide lens with unit focal length so that a beam at sin(theta) crosses at theta.
const LensModel kWide{LensKind::SineCondition, 1.0, 0.9};

IntensityFrame vector_frame(double theta, double azimuth, const Jones& pol) {
  const double d = kWave.wavelength / (2.0 * std::sin(theta));
  BeamSpec b;
  b.position = {std::sin(theta) * std::cos(azimuth), std::sin(theta) * std::sin(azimuth)};
  b.polarization = pol;
  return vector_fringe_frame(kWave, kWide, BeamPair{b}, GridSpec{96, 96 * d / 5.0}, false);
}

double fringe_visibility(double theta, double azimuth, const Jones& pol) {
  const double d = kWave.wavelength / (2.0 * std::sin(theta));
  return visibility(vector_frame(theta, azimuth, pol), d, azimuth, INFINITY);
}

}  // namespace

TEST(Spectrum, UniformFrameHasOnlyDc) {
  IntensityFrame f(GridSpec{64, 1e-3});
  std::fill(f.values.begin(), f.values.end(), 2.5);
  const auto s = spectrum(f);
  EXPECT_NEAR(s.magnitude(0, 0), 2.5 * 64 * 64, 1e-9 * 2.5 * 64 * 64);
  for (std::size_t i = 1; i < s.coeffs.size(); ++i) EXPECT_LT(std::abs(s.coeffs[i]), 1e-9);
  try {
    find_peaks(s, default_exclusion_radius(s));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoLattice);
  }
}

TEST(Spectrum, MatchesDirectDft) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IntensityFrame f(GridSpec{24, 1e-3});
  for (auto& v : f.values) v = u(rng);
  const auto s = spectrum(f);
  for (long long v = 0; v < 24; v += 5)
    for (long long uu = 0; uu < 24; uu += 3) {
      const auto ref = oracle::dft_bin(f, uu, v);
      EXPECT_LT(std::abs(s.coeffs[v * 24 + uu] - ref), 1e-10 * std::abs(s.coeffs[0]));
    }
  EXPECT_DOUBLE_EQ(s.step(), 1.0 / 1e-3);
  EXPECT_EQ(s.signed_bin(23), -1.0);
  EXPECT_EQ(s.signed_bin(11), 11.0);
}

TEST(Spectrum, ParsevalAndDcMean) {
  const auto f = fringe(2e-3, 0.3);
  const auto s = spectrum(f);
  double energy = 0.0, mean = 0.0, spec_energy = 0.0;
  for (double v : f.values) {
    energy += v * v;
    mean += v;
  }
  mean /= static_cast<double>(f.values.size());
  for (const auto& c : s.coeffs) spec_energy += std::norm(c);
  const double n2 = 512.0 * 512.0;
  EXPECT_NEAR(spec_energy / n2 / energy, 1.0, 1e-9);
  EXPECT_NEAR(s.coeffs[0].real() / (mean * n2), 1.0, 1e-9);
}

TEST(FindPeaks, PureCosineGivesOneDedupedPeakAtOneOverD) {
  const GridSpec g{128, 1.28e-3};
  IntensityFrame f(g);
  const int m = 10;  // cycles across the frame
  for (std::size_t row = 0; row < g.n; ++row)
    for (std::size_t col = 0; col < g.n; ++col) f.at(row, col) = 1.0 + std::cos(kTwoPi * m * col / 128.0);
  const auto s = spectrum(f);
  EXPECT_NEAR(s.magnitude(0, m), s.magnitude(0, 128 - m), 1e-9);
  const auto peaks = find_peaks(s, 1.5 * s.step());
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks[0].kx, m / g.extent, 1e-9);
  EXPECT_NEAR(peaks[0].ky, 0.0, 1e-9);
  const auto est = estimate_period(peaks);
  EXPECT_NEAR(est.period, g.extent / m, 1e-15);
  EXPECT_NEAR(est.angle, 0.0, 1e-12);
}

TEST(FindPeaks, RotationFrameAtOneOverD) {
  const double d = 104e-6;
  const auto f = fringe(separation_for_period(kWave, 0.25, d), 0.0);
  const auto s = spectrum(f);
  const auto peaks = find_peaks(s, default_exclusion_radius(s));
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks[0].radius(), 9615.0, peaks[0].width);
  EXPECT_NEAR(peaks[0].radius(), 1.0 / d, 0.01 / d);
}

TEST(FindPeaks, EnvelopeBroadensPeak) {
  const auto f = fringe(2e-3, 0.0);
  const auto s = spectrum(f);
  const auto p = find_peaks(s, default_exclusion_radius(s));
  EXPECT_NEAR(p[0].width / oracle::envelope_spectral_width(kWaist), 1.0, 0.15);
  EXPECT_NEAR(envelope_spectral_width(s) / oracle::envelope_spectral_width(kWaist), 1.0, 0.15);
  const auto bare = spectrum(fringe(2e-3, 0.0, kCameraGrid, kWaist, false));
  EXPECT_LT(find_peaks(bare, default_exclusion_radius(bare))[0].width, 0.5 * p[0].width);
}

TEST(FindPeaks, TwoDimensionalLatticeGivesOrthogonalPair) {
  BeamSpec b;
  b.polarization = jones_circular();
  BeamPair a{b}, c{b};
  a.primary.position = rotating_position(2e-3, 0.2);
  c.primary.position = rotating_position(2e-3, 0.2 + kPi / 2);
  const auto f = combine_lattices(kWave, kLens, a, c, kCameraGrid, CombineMode::Incoherent);
  const auto s = spectrum(f);
  const auto peaks = find_peaks(s, default_exclusion_radius(s));
  ASSERT_EQ(peaks.size(), 2u);
  const double dot = peaks[0].kx * peaks[1].kx + peaks[0].ky * peaks[1].ky;
  EXPECT_LT(std::abs(dot) / (peaks[0].radius() * peaks[1].radius()), std::sin(kPi / 180.0));
  EXPECT_NEAR(peaks[0].radius() / peaks[1].radius(), 1.0, 0.01);
}

TEST(FindPeaks, NoiseHasNoLattice) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(10.0, 1.0);
  IntensityFrame f(kCameraGrid);
  for (auto& v : f.values) v = std::max(0.0, noise(rng));
  try {
    analyze_frame(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoLattice);
  }
}

TEST(EstimatePeriod, RotationFrame) {
  const auto r = analyze(fringe(2e-3, 0.0));
  EXPECT_NEAR(r.period, 103.8e-6, 0.5e-6);
  // Envelope-limited width: d^2 sqrt(2) / (pi w).
  const double expected = r.period * r.period * oracle::envelope_spectral_width(kWaist);
  EXPECT_NEAR(r.period_uncertainty / expected, 1.0, 0.1);
  EXPECT_NEAR(r.period_uncertainty, 5.2e-6, 0.5e-6);
  EXPECT_NEAR(r.visibility, 1.0, 1e-3);
  EXPECT_GT(r.period_uncertainty, 0.0);
  EXPECT_THROW(estimate_period({}), Error);
}

TEST(EstimatePeriod, AccordionSeparations) {
  const double sep[] = {1.584e-3, 2.385e-3, 3.517e-3};
  const double expected[] = {131e-6, 87e-6, 59e-6};
  for (int i = 0; i < 3; ++i) {
    const auto r = analyze(fringe(sep[i], 0.0));
    EXPECT_NEAR(r.period, expected[i], r.period_uncertainty);
    EXPECT_NEAR(r.period, kWave.wavelength * 0.25 / sep[i], 0.01 * r.period_uncertainty + 0.2e-6);
  }
}

TEST(EstimatePeriod, ResolutionIndependent) {
  const auto a = analyze(fringe(2e-3, 0.4, GridSpec{256, 2.3e-3}));
  const auto b = analyze(fringe(2e-3, 0.4, GridSpec{512, 2.3e-3}));
  EXPECT_NEAR(a.period / b.period, 1.0, 0.01);
  EXPECT_NEAR(a.period_uncertainty / b.period_uncertainty, 1.0, 0.01);
}

TEST(EstimatePeriod, UncertaintyScalesInverselyWithWaist) {
  const double sep = separation_for_period(kWave, 0.25, 40e-6);
  const auto narrow = analyze(fringe(sep, 0.0, kCameraGrid, 0.3e-3), 0.3e-3);
  const auto wide = analyze(fringe(sep, 0.0, kCameraGrid, 0.6e-3), 0.6e-3);
  EXPECT_NEAR(narrow.period_uncertainty / wide.period_uncertainty, 2.0, 0.3);
}

TEST(EstimatePeriod, ClosureOnRandomScenes) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> sep(1.3e-3, 4.5e-3), az(-kPi, kPi), w(0.6e-3, 1.0e-3);
  for (int i = 0; i < 20; ++i) {
    const double s = sep(rng), a = az(rng), waist = w(rng);
    const auto r = analyze(fringe(s, a, kCameraGrid, waist), waist);
    const double truth = kWave.wavelength * 0.25 / s;
    EXPECT_LE(std::abs(r.period - truth), r.period_uncertainty) << "case " << i;
    EXPECT_LT(std::abs(wrap_half_turn(r.fringe_angle - a)), kPi / 180.0) << "case " << i;
  }
}

TEST(Visibility, IdealScalarIsOne) {
  const double sep = 2e-3;
  const double d = kWave.wavelength * 0.25 / sep;
  EXPECT_NEAR(visibility(fringe(sep, 0.7), d, 0.7, kWaist), 1.0, 1e-6);
  EXPECT_NEAR(visibility(fringe(sep, 0.7, kCameraGrid, kWaist, false), d, 0.7, INFINITY), 1.0, 1e-6);
}

TEST(Visibility, LinearPolarizationAt20Degrees) {
  const double theta = 20.0 * kPi / 180.0;
  const double v = fringe_visibility(theta, 0.0, jones_linear(0.0));
  EXPECT_NEAR(v, 0.766, 0.01);
  EXPECT_NEAR(v, oracle::pair_contrast(theta, 0.0, jones_linear(0.0), jones_linear(0.0)), 1e-9);
}

TEST(Visibility, ZeroContrastFrame) {
  EXPECT_NEAR(fringe_visibility(kPi / 4, 0.0, jones_linear(0.0)), 0.0, 1e-6);
  IntensityFrame flat(GridSpec{64, 1e-3});
  std::fill(flat.values.begin(), flat.values.end(), 3.0);
  EXPECT_NEAR(visibility(flat, 100e-6, 0.0, INFINITY), 0.0, 1e-6);
}

TEST(Visibility, GuardsExpectedPeriod) {
  IntensityFrame flat(GridSpec{64, 1e-3});
  EXPECT_THROW(visibility(flat, 0.0, 0.0), Error);
  EXPECT_THROW(visibility(flat, 1e-6, 0.0), Error);
}

TEST(DepthModulation, CircularIsFlatOverRotation) {
  std::vector<double> v;
  for (int i = 0; i < 24; ++i) v.push_back(fringe_visibility(kPi / 4, kPi * i / 24.0, jones_circular()));
  EXPECT_NEAR(v[0], 0.5, 1e-9);
  EXPECT_LT(depth_modulation(v), 1e-9);
}

TEST(DepthModulation, LinearAt20Degrees) {
  const double theta = 20.0 * kPi / 180.0;
  std::vector<double> v;
  for (int i = 0; i < 24; ++i) v.push_back(fringe_visibility(theta, kPi * i / 24.0, jones_linear(0.0)));
  const double c = std::cos(2 * theta);
  EXPECT_NEAR(depth_modulation(v), (1 - c) / (1 + c), 0.005);
  EXPECT_NEAR(depth_modulation(v), 0.132, 0.005);
}

TEST(DepthModulation, ParaxialLimitVanishes) {
  std::vector<double> v;
  for (int i = 0; i < 24; ++i) v.push_back(fringe_visibility(1e-3, kPi * i / 24.0, jones_linear(0.0)));
  EXPECT_LT(depth_modulation(v), 1e-5);
  EXPECT_THROW(depth_modulation(std::vector<double>{}), Error);
}

TEST(Constancy, RotationOverHalfTurn) {
  std::vector<AnalysisReport> reports;
  std::vector<double> angles;
  for (int i = 0; i < 12; ++i) {
    const double a = kPi * i / 12.0;
    reports.push_back(analyze(fringe(2e-3, a)));
    angles.push_back(a);
  }
  const auto c = period_constancy(reports, angles);
  EXPECT_LT(c.max_relative_deviation, 0.01);
  EXPECT_TRUE(c.constant);
  ASSERT_TRUE(c.max_angle_error);
  EXPECT_LT(*c.max_angle_error, kPi / 180.0);
}

TEST(Constancy, IdenticalFramesAndAccordion) {
  const auto r = analyze(fringe(2e-3, 0.1));
  const std::vector<AnalysisReport> same{r, r, r};
  const auto c = period_constancy(same);
  EXPECT_EQ(c.max_relative_deviation, 0.0);
  EXPECT_TRUE(c.constant);

  std::vector<AnalysisReport> acc;
  for (double s : {1.584e-3, 2.385e-3, 3.517e-3}) acc.push_back(analyze(fringe(s, 0.0)));
  const auto k = period_constancy(acc);
  EXPECT_GT(k.max_relative_deviation, 0.2);
  EXPECT_FALSE(k.constant);
  EXPECT_THROW(period_constancy(std::vector<AnalysisReport>{r}), Error);
}

TEST(Angles, WrapHalfTurn) {
  EXPECT_NEAR(wrap_half_turn(kPi), 0.0, 1e-15);
  EXPECT_NEAR(wrap_half_turn(kPi / 2), kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_half_turn(-kPi / 2), kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_half_turn(3.0), 3.0 - kPi, 1e-15);
}
