#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "oamspdc/detector.hpp"
#include "oamspdc/errors.hpp"
#include "oracles.hpp"

using namespace oamspdc;

namespace {

SpectrumMatrix single(int n_max, int ls, int li) {
  SpectrumMatrix s(n_max);
  s(ls, li) = 1.0;
  s.normalized = true;
  return s;
}

SpectrumMatrix three_term() {
  SpectrumMatrix s(3);
  s(1, -1) = 0.5;
  s(-2, 3) = 0.3;
  s(0, 1) = 0.2;
  s.normalized = true;
  return s;
}

InterferometerParams ideal(double delta = 0.0) {
  InterferometerParams p;
  p.delta = delta;
  return p;
}

}  // namespace

TEST(ModeTransform, MirrorTwiceIsIdentity) {
  for (int l = -4; l <= 4; ++l) {
    const auto once = mode_transform_phase(l, 0.0, ModeElement::mirror);
    const auto twice = mode_transform_phase(once.l_out, 0.0, ModeElement::mirror);
    EXPECT_EQ(twice.l_out, l);
    EXPECT_NEAR(std::abs(once.phase * twice.phase - Complex{1.0, 0.0}), 0.0, 1e-14);
  }
}

TEST(ModeTransform, RotatorAtZeroEqualsMirror) {
  for (int l = -3; l <= 3; ++l) {
    const auto m = mode_transform_phase(l, 0.0, ModeElement::mirror);
    const auto r = mode_transform_phase(l, 0.0, ModeElement::rotator);
    EXPECT_EQ(m.l_out, r.l_out);
    EXPECT_NEAR(std::abs(m.phase - r.phase), 0.0, 1e-15);
  }
}

TEST(ModeTransform, DirectSubstitution) {
  const auto t = mode_transform_phase(2, oracle::pi / 8, ModeElement::rotator);
  EXPECT_EQ(t.l_out, -2);
  EXPECT_NEAR(std::abs(t.phase - std::polar(1.0, -oracle::pi / 2)), 0.0, 1e-14);
}

TEST(Coincidence, GroundModeExtremes) {
  const auto s = single(0, 0, 0);
  EXPECT_NEAR(coincidence_probability(s, 0.3, -0.2, ideal(0.0)), 4.0, 1e-14);
  EXPECT_NEAR(coincidence_probability(s, 0.3, -0.2, ideal(oracle::pi)), 0.0, 1e-14);
}

TEST(Coincidence, SingleAntiCorrelatedTerm) {
  const auto s = single(1, 1, -1);
  for (double d : {0.0, 0.7, 2.0})
    for (double ts : {-0.4, 0.1})
      for (double ti : {0.25, -1.2})
        EXPECT_NEAR(coincidence_probability(s, ts, ti, ideal(d)), 2.0 + 2.0 * std::cos(d + 2 * ts - 2 * ti), 1e-13);
}

TEST(Coincidence, MixedSpectrumMatchesTermByTermSum) {
  const auto s = three_term();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-oracle::pi / 2, oracle::pi / 2), ph(0.0, 2 * oracle::pi),
      amp(0.3, 1.5);
  for (int i = 0; i < 5; ++i) {
    InterferometerParams p;
    p.k1 = amp(rng);
    p.k2 = amp(rng);
    p.delta = ph(rng);
    const double ts = ang(rng), ti = ang(rng);
    EXPECT_NEAR(coincidence_probability(s, ts, ti, p), oracle::coincidence(s, ts, ti, p.delta, p.k1, p.k2), 1e-13);
  }
}

TEST(Coincidence, UnnormalizedSpectrumRejected) {
  SpectrumMatrix s(1);
  s(0, 0) = 2.0;
  EXPECT_THROW(coincidence_probability(s, 0.0, 0.0, ideal()), DomainError);
}

TEST(MeasuredCoincidence, NoiselessEqualsIdeal) {
  const auto s = three_term();
  const auto m = measured_coincidence(s, 0.2, -0.3, ideal(0.4), NoiseModel{});
  EXPECT_EQ(m.value(), coincidence_probability(s, 0.2, -0.3, ideal(0.4)));
}

TEST(MeasuredCoincidence, SharedFluxCancelsInVisibility) {
  const auto s = three_term();
  NoiseModel noise;
  noise.flux_fluctuation = 0.1;
  noise.seed = 77;
  for (double ts : {-0.5, 0.0, 0.9}) {
    const auto c = measured_coincidence(s, ts, 0.3, ideal(0.0), noise);
    const auto d = measured_coincidence(s, ts, 0.3, ideal(oracle::pi), noise);
    EXPECT_NE(c.flux, 1.0);
    const double clean = visibility(coincidence_probability(s, ts, 0.3, ideal(0.0)),
                                    coincidence_probability(s, ts, 0.3, ideal(oracle::pi)));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(visibility(c, d)), std::bit_cast<std::uint64_t>(clean));
  }
}

TEST(MeasuredCoincidence, SeededRerunsAreBitIdentical) {
  const auto s = three_term();
  NoiseModel noise{0.1, 0.02, 1234, true};
  const auto a = measured_coincidence(s, 0.11, 0.22, ideal(1.0), noise);
  const auto b = measured_coincidence(s, 0.11, 0.22, ideal(1.0), noise);
  EXPECT_EQ(a.value(), b.value());
  noise.seed = 1235;
  EXPECT_NE(measured_coincidence(s, 0.11, 0.22, ideal(1.0), noise).value(), a.value());
}

TEST(MeasuredCoincidence, UnsharedFluxDiffersPerPhase) {
  const auto s = three_term();
  NoiseModel noise{0.1, 0.0, 5, false};
  const auto c = measured_coincidence(s, 0.1, 0.2, ideal(0.0), noise);
  const auto d = measured_coincidence(s, 0.1, 0.2, ideal(oracle::pi), noise);
  EXPECT_NE(c.flux, d.flux);
}

TEST(MeasuredCoincidence, AccidentalsBoundedByModel) {
  const auto s = three_term();
  NoiseModel noise{0.0, 0.05, 9, true};
  for (double ts = -1.5; ts < 1.5; ts += 0.3) {
    const double clean = coincidence_probability(s, ts, 0.4, ideal());
    const double noisy = measured_coincidence(s, ts, 0.4, ideal(), noise).value();
    EXPECT_GE(noisy, clean);
    EXPECT_LE(noisy, clean + 0.05 * 2.0 * 2.0);
  }
}

TEST(NoiseModel, Validation) {
  EXPECT_THROW((NoiseModel{-0.1, 0.0, 0, true}.validate()), ConfigError);
  EXPECT_THROW((NoiseModel{0.0, -1.0, 0, true}.validate()), ConfigError);
}

TEST(DeltaScan, GroundModeAtOrigin) {
  const auto ex = delta_scan_extrema(single(0, 0, 0), 0.0, 0.0, ideal(), NoiseModel{});
  EXPECT_NEAR(ex.max.value(), 4.0, 1e-14);
  EXPECT_NEAR(ex.min.value(), 0.0, 1e-14);
}

TEST(DeltaScan, SampledCosineWithinOneStep) {
  const auto s = single(1, 1, -1);
  const double step = oracle::deg(9.0);
  for (double ts : {0.13, -0.71}) {
    const double phase = 2 * ts - 2 * 0.05;
    const auto ex = delta_scan_extrema(s, ts, 0.05, ideal(), NoiseModel{});
    // Analytic extremes sit at delta = -phase and pi - phase (mod 2 pi).
    const double dmax = std::remainder(ex.delta_at_max + phase, 2 * oracle::pi);
    const double dmin = std::remainder(ex.delta_at_min + phase - oracle::pi, 2 * oracle::pi);
    EXPECT_LE(std::abs(dmax), step);
    EXPECT_LE(std::abs(dmin), step);
    EXPECT_GE(ex.max.value(), 2.0 + 2.0 * std::cos(step));
    EXPECT_LE(ex.min.value(), 2.0 - 2.0 * std::cos(step));
  }
}

TEST(DeltaScan, MustCoverFullPeriod) {
  EXPECT_THROW(delta_scan_extrema(single(0, 0, 0), 0.0, 0.0, ideal(), NoiseModel{}, 39), DomainError);
}

TEST(Visibility, Basics) {
  EXPECT_EQ(visibility(4.0, 0.0), 1.0);
  EXPECT_EQ(visibility(2.5, 2.5), 0.0);
  EXPECT_THROW(visibility(0.0, 0.0), NumericalError);
  const auto s = single(1, 1, -1);
  for (double ts : {-0.3, 0.4})
    for (double ti : {0.2, 1.0}) {
      const double v = visibility(coincidence_probability(s, ts, ti, ideal(0.0)),
                                  coincidence_probability(s, ts, ti, ideal(oracle::pi)));
      EXPECT_NEAR(v, std::cos(2 * ts - 2 * ti), 1e-14);
    }
}

TEST(Visibility, BoundedByPrefactor) {
  const auto s = three_term();
  InterferometerParams p;
  p.k1 = 0.5;
  p.k2 = 1.3;
  const auto grid = AngularGrid::from_step(6.0);
  ForwardOptions opts;
  opts.parallel.threads = 1;
  const auto f = forward_visibility(s, grid, p, NoiseModel{}, opts);
  for (double v : f.visibility.values) EXPECT_LE(std::abs(v), p.visibility_prefactor() + 1e-12);
}

TEST(ForwardModel, ScanVisibilityTracksTwoShot) {
  SpectrumMatrix s(3);
  s(0, 0) = 0.4;
  s(1, -1) = s(-1, 1) = 0.2;
  s(1, 0) = s(-1, 0) = s(0, 1) = s(0, -1) = 0.05;
  s.normalized = true;
  const auto grid = AngularGrid::from_step(10.0);
  ForwardOptions two;
  ForwardOptions scan;
  scan.method = ExtremaMethod::delta_scan;
  const auto a = forward_visibility(s, grid, ideal(), NoiseModel{}, two);
  const auto b = forward_visibility(s, grid, ideal(), NoiseModel{}, scan);
  // A reflection-symmetric spectrum has a real mode sum, so the scan hits
  // its extremes exactly at delta = 0 and pi (in either order).
  for (std::size_t i = 0; i < a.visibility.values.size(); ++i)
    EXPECT_NEAR(b.visibility.values[i], std::abs(a.visibility.values[i]), 1e-12);
}

TEST(ForwardModel, IndependentOfWorkerCount) {
  const auto s = three_term();
  const auto grid = AngularGrid::from_step(5.0);
  NoiseModel noise{0.1, 0.02, 42, true};
  ForwardOptions one, many;
  one.parallel.threads = 1;
  many.parallel.threads = 4;
  many.parallel.block_size = 7;
  const auto a = forward_visibility(s, grid, ideal(), noise, one);
  const auto b = forward_visibility(s, grid, ideal(), noise, many);
  EXPECT_EQ(a.rate_c.values, b.rate_c.values);
  EXPECT_EQ(a.visibility.values, b.visibility.values);
}

TEST(PolarizationResponse, IdealIsIdentity) {
  const auto grid = AngularGrid::from_step(15.0);
  VisibilitySurface v(grid);
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = std::sin(0.1 * static_cast<double>(i));
  const auto out = polarization_correct(v, PolarizationResponse{}, PolarizationResponse{});
  EXPECT_EQ(out.values, v.values);
  EXPECT_EQ(out.invalid_count(), 0u);
}

TEST(PolarizationResponse, LinearTableRecoversSignal) {
  const auto grid = AngularGrid::from_step(10.0);
  PolarizationResponse psi_s({-90.0, 90.0}, {-oracle::pi / 2 * 0.9, oracle::pi / 2 * 0.9});
  VisibilitySurface v(grid);
  auto g = [](double a, double b) { return 0.3 * std::cos(a - 2 * b); };
  for (std::size_t is = 0; is < grid.size(); ++is)
    for (std::size_t ii = 0; ii < grid.size(); ++ii)
      v.at(is, ii) = std::cos(0.9 * grid.theta_rad(is)) * g(grid.theta_rad(is), grid.theta_rad(ii));
  const auto out = polarization_correct(v, psi_s, PolarizationResponse{});
  for (std::size_t is = 0; is < grid.size(); ++is)
    for (std::size_t ii = 0; ii < grid.size(); ++ii)
      EXPECT_NEAR(out.at(is, ii), g(grid.theta_rad(is), grid.theta_rad(ii)), 1e-13);
}

TEST(PolarizationResponse, ForwardThenCorrectRoundTrip) {
  const auto table = PolarizationResponse::parse_csv(
      "theta_deg,psi_rad\n-90,0.31\n-45,0.12\n0,-0.05\n30,0.2\n90,0.4\n");
  InterferometerParams p;
  p.psi_s = table;
  p.psi_i = PolarizationResponse({-90.0, 0.0, 90.0}, {0.1, 0.3, -0.2});
  const auto s = three_term();
  const auto grid = AngularGrid::from_step(9.0);
  const auto ideal_v = forward_visibility(s, grid, ideal(), NoiseModel{}).visibility;
  const auto measured = forward_visibility(s, grid, p, NoiseModel{}).visibility;
  const auto corrected = polarization_correct(measured, p.psi_s, p.psi_i);
  for (std::size_t i = 0; i < ideal_v.values.size(); ++i)
    EXPECT_NEAR(corrected.values[i], ideal_v.values[i], 1e-12);
}

TEST(PolarizationResponse, NearZeroFactorMarksPointInvalid) {
  const auto grid = AngularGrid::from_step(45.0);
  PolarizationResponse psi({-90.0, 90.0}, {oracle::pi / 2, oracle::pi / 2});
  VisibilitySurface v(grid);
  const auto out = polarization_correct(v, psi, PolarizationResponse{});
  EXPECT_EQ(out.invalid_count(), out.values.size());
}

TEST(PolarizationResponse, TableValidationAndInterpolation) {
  EXPECT_THROW(PolarizationResponse({0.0}, {0.0}), ConfigError);
  EXPECT_THROW(PolarizationResponse({0.0, 0.0}, {0.0, 1.0}), ConfigError);
  EXPECT_THROW(PolarizationResponse::parse_csv("theta,psi\n0,0\n1,1\n"), ConfigError);
  EXPECT_THROW(PolarizationResponse::parse_csv("theta_deg,psi_rad\n0,abc\n1,1\n"), ConfigError);
  const PolarizationResponse t({-10.0, 10.0}, {0.0, 2.0});
  EXPECT_NEAR(t.psi(oracle::deg(5.0)), 1.5, 1e-14);
  EXPECT_FALSE(t.covers(-90.0, 90.0));
  EXPECT_THROW(t.psi(oracle::deg(20.0)), DomainError);
  InterferometerParams p;
  p.psi_s = t;
  EXPECT_THROW(forward_visibility(three_term(), AngularGrid::from_step(10.0), p, NoiseModel{}), ConfigError);
}

TEST(AngularGrid, StepMustDivideHalfTurn) {
  const auto g = AngularGrid::from_step(0.9);
  EXPECT_EQ(g.intervals, 200);
  EXPECT_EQ(g.size(), 201u);
  EXPECT_DOUBLE_EQ(g.theta_deg(0), -90.0);
  EXPECT_NEAR(g.theta_deg(200), 90.0, 1e-12);
  EXPECT_EQ(g.weight(0), 0.5);
  EXPECT_EQ(g.weight(100), 1.0);
  EXPECT_THROW(AngularGrid::from_step(0.7), ConfigError);
  EXPECT_THROW(AngularGrid::from_step(0.0), ConfigError);
}

TEST(SamplingStep, RequiredStepAndInverse) {
  EXPECT_NEAR(required_angular_step(40), 180.0 / 81.0, 1e-14);
  EXPECT_NEAR(required_angular_step(40), 2.22, 5e-3);
  EXPECT_EQ(required_angular_step(0), 180.0);
  EXPECT_EQ(max_modes_for_step(0.9), 99);
  EXPECT_EQ(max_modes_for_step(180.0 / 81.0), 40);
  EXPECT_EQ(max_modes_for_step(180.0), 0);
}

TEST(RSquared, HandEvaluations) {
  const auto s = three_term();
  EXPECT_EQ(r_squared(s, s), 100.0);

  SpectrumMatrix delta(1);
  delta(0, 0) = 1.0;
  SpectrumMatrix uniform(1);
  for (auto& v : uniform.values.data()) v = 1.0 / 9.0;
  // P_in = delta: mean 1/9, SS_tot = (8/9)^2 + 8 (1/9)^2 = 8/9.
  // P_ob = uniform: SS_res = (8/9)^2 + 8 (1/9)^2 = 8/9, so R^2 = 0.
  EXPECT_NEAR(r_squared(uniform, delta), 0.0, 1e-12);
  // Swapped roles: SS_tot = 0 is undefined.
  EXPECT_THROW(r_squared(delta, uniform), NumericalError);

  SpectrumMatrix half(1);
  half(0, 0) = 0.5;
  half(1, -1) = 0.5;
  // SS_res = 0.25 + 0.25 = 0.5; R^2 = 100 (1 - 0.5 / (8/9)) = 43.75.
  EXPECT_NEAR(r_squared(half, delta), 43.75, 1e-12);
  EXPECT_THROW(r_squared(SpectrumMatrix(2), delta), DomainError);
}
