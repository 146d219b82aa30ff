#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vstate/contour.hpp"

using namespace vstate;

namespace {

FourierContour random_contour(std::mt19937& rng, int m, int count, double amp = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(count);
  for (int k = 0; k < count; ++k) a[k] = amp * u(rng) / ((k + 1) * (k + 1));
  return FourierContour(0.5, m, a);
}

}  // namespace

TEST(Contour, EvalBoundaryPointValues) {
  EXPECT_NEAR(std::abs(eval_boundary(FourierContour(0.5, 1, {0.0}), kPi / 2) - Complex(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval_boundary(FourierContour(0.5, 3, {0.1}), 0.0) - Complex(0.6, 0.0)), 0.0, 1e-15);
  const Complex z = eval_boundary(FourierContour(0.8, 4, {0.05}), kPi / 8);
  EXPECT_NEAR(std::abs(z - 0.8 * std::polar(1.0, kPi / 8)), 0.0, 1e-15);
}

TEST(Contour, EvalTangentPointValues) {
  const double b = 0.7, t = 0.9;
  EXPECT_NEAR(std::abs(eval_tangent(FourierContour::circle(b, 2, 3), t) - Complex(0.0, b) * std::polar(1.0, t)),
              0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval_tangent(FourierContour(0.5, 3, {0.1}), 0.0) - Complex(0.0, 0.6)), 0.0, 1e-15);
}

TEST(Contour, TangentMatchesCentralDifferences) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const FourierContour c = random_contour(rng, 1 + trial % 5, 6);
    for (double t : {0.1, 0.7, 2.3, 4.0, 5.9}) {
      const double h = 1e-6;
      const Complex fd = (eval_boundary(c, t + h) - eval_boundary(c, t - h)) / (2.0 * h);
      const Complex dz = eval_tangent(c, t);
      EXPECT_LE(std::abs(fd - dz) / std::abs(dz), 1e-8);
    }
  }
}

TEST(Contour, ReflectionAndFoldSymmetry) {
  std::mt19937 rng(11);
  for (int m = 1; m <= 6; ++m) {
    const FourierContour c = random_contour(rng, m, 7);
    const SpectralGrid g = SpectralGrid::for_fold(m, 4);
    const Complex rot = std::polar(1.0, kTwoPi / m);
    double fold_err = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      const double t = g.theta(i);
      EXPECT_LE(std::abs(std::conj(eval_boundary(c, -t)) - eval_boundary(c, t)), 1e-14);
      fold_err = std::max(fold_err, std::abs(eval_boundary(c, t + kTwoPi / m) - rot * eval_boundary(c, t)));
    }
    EXPECT_LE(fold_err, 1e-13);
  }
}

TEST(Contour, SampleCircleAndNesting) {
  const SampledCurve s = sample(FourierContour::circle(0.5, 1, 3), SpectralGrid(8));
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(std::abs(s.z[j] - 0.5 * std::polar(1.0, kTwoPi * j / 8)), 0.0, 1e-15);

  std::mt19937 rng(3);
  const FourierContour c = random_contour(rng, 3, 5);
  const SampledCurve coarse = sample(c, SpectralGrid(48));
  const SampledCurve fine = sample(c, SpectralGrid(96));
  for (int i = 0; i < 48; ++i) {
    EXPECT_EQ(coarse.z[i], fine.z[2 * i]);
    EXPECT_EQ(coarse.dz[i], fine.dz[2 * i]);
  }
}

TEST(Contour, SampleFoldShift) {
  std::mt19937 rng(5);
  const FourierContour c = random_contour(rng, 3, 3);
  const SampledCurve s = sample(c, SpectralGrid(24));
  const Complex rot = std::polar(1.0, kTwoPi / 3);
  for (int i = 0; i < 16; ++i) EXPECT_LE(std::abs(s.z[i + 8] - rot * s.z[i]), 1e-15);
}

TEST(Contour, GridCoefficientCount) {
  for (int m = 1; m <= 5; ++m)
    for (int r = 2; r <= 8; ++r) {
      const SpectralGrid g = SpectralGrid::for_fold(m, r);
      EXPECT_EQ(g.node_count(), m << r);
      EXPECT_EQ(g.coeff_count(m), (1 << (r - 1)) - 1);
      EXPECT_GE(g.node_count(), 2 * m * g.coeff_count(m) + 1);
    }
  EXPECT_THROW(SpectralGrid(24).require_compatible(3, 4), ConfigurationError);
}

TEST(Contour, RejectsBadContours) {
  EXPECT_THROW(FourierContour(0.0, 1, {0.0}), PreconditionError);
  EXPECT_THROW(FourierContour(1.0, 1, {0.0}), PreconditionError);
  EXPECT_THROW(FourierContour(0.5, 0, {0.0}), PreconditionError);
  EXPECT_THROW(FourierContour(0.5, 2, {}), PreconditionError);
  // radius through the origin at theta = pi/2
  EXPECT_THROW(sample(FourierContour(0.3, 2, {0.5}), SpectralGrid(16)), DegenerateContour);
}

TEST(Contour, MinSeparationClosedForms) {
  const FourierContour outer = FourierContour::circle(0.8, 4, 3), inner = FourierContour::circle(0.3, 4, 3);
  EXPECT_NEAR(min_separation(outer, inner, SpectralGrid(64)), 0.5, 1e-12);
  const double b = 0.65;
  EXPECT_NEAR(gap_to_unit_circle(FourierContour::circle(b, 2, 3), SpectralGrid(32)), 1.0 - b, 1e-14);
}

TEST(Contour, MinSeparationTranslatedCirclesAgainstDenseScan) {
  struct Case { Complex c1; double r1; Complex c2; double r2; };
  for (const Case& k : {Case{{0.1, 0.05}, 0.2, {-0.35, 0.1}, 0.15}, Case{{0.0, 0.0}, 0.3, {0.55, -0.2}, 0.2},
                        Case{{-0.2, 0.3}, 0.1, {0.25, -0.25}, 0.25}}) {
    const auto fa = [&](double t) { return k.c1 + k.r1 * std::polar(1.0, t); };
    const auto fb = [&](double t) { return k.c2 + k.r2 * std::polar(1.0, t); };
    const double brute = oracle::dense_min_distance(fa, fb);
    EXPECT_NEAR(min_separation_curves(fa, fb, 256), brute, 1e-8);
    EXPECT_NEAR(brute, std::abs(k.c1 - k.c2) - k.r1 - k.r2, 1e-8);
  }
}

TEST(Contour, AreaOfCircles) {
  EXPECT_NEAR(enclosed_area(FourierContour::circle(0.5, 1, 3), SpectralGrid(16)), kPi / 4, 1e-12);
  EXPECT_NEAR(enclosed_area(FourierContour::circle(0.9, 3, 3), SpectralGrid(48)), 0.81 * kPi, 1e-12);
}

TEST(Contour, AreaAgainstAdaptiveQuadrature) {
  std::mt19937 rng(17);
  for (int m = 1; m <= 4; ++m) {
    const FourierContour c = random_contour(rng, m, 5, 0.15);
    const double ref = oracle::polar_area([&](double t) { return c.radius(t); });
    EXPECT_NEAR(enclosed_area(c, SpectralGrid::for_fold(m, 6)), ref, 1e-8);
  }
}

TEST(Contour, MaxModulusRefinesBetweenNodes) {
  // r = 0.5 + 0.1 cos t - 0.05 cos 2t peaks at cos t = 1/2, which is not a node of N = 16
  const FourierContour c(0.5, 1, {0.1, -0.05});
  EXPECT_NEAR(1.0 - gap_to_unit_circle(c, SpectralGrid(16)), 0.575, 1e-12);
}
