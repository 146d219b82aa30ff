#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vstate/dynamics.hpp"

using namespace vstate;

namespace {

// normal component of v relative to the curve with tangent dz
double normal_part(Complex v, Complex dz) { return std::real(v * std::conj(Complex(0.0, -1.0) * dz)) / std::abs(dz); }

}  // namespace

TEST(Dynamics, SpectralDerivativeOfSamples) {
  const int n = 64;
  std::vector<Complex> z(n);
  for (int i = 0; i < n; ++i) {
    const double t = kTwoPi * i / n;
    z[i] = std::polar(0.5 + 0.1 * std::cos(3 * t), t);
  }
  const auto dz = spectral_derivative(z);
  const FourierContour c(0.5, 3, {0.1});
  for (int i = 0; i < n; ++i) EXPECT_LE(std::abs(dz[i] - eval_tangent(c, kTwoPi * i / n)), 1e-13);
}

TEST(Dynamics, CircleIsStationaryWithRankineProfile) {
  const SpectralGrid g(256);
  for (double b : {0.3, 0.7, 0.95}) {
    const EvolutionState s = EvolutionState::from_contours({FourierContour::circle(b, 1, 3)}, g);
    const auto v = node_velocities(s.nodes, 1);
    const SampledCurve sc = sample(FourierContour::circle(b, 1, 3), g);
    for (int i = 0; i < 256; ++i) {
      EXPECT_LE(std::abs(normal_part(v[0][i], sc.dz[i])), 1e-10);
      EXPECT_LE(std::abs(v[0][i] - Complex(0.0, 0.5) * sc.z[i]), 1e-10);
    }
    // velocity at an off-curve target inside the patch
    EXPECT_LE(std::abs(boundary_velocity(s, Complex(0.1 * b, 0.0)) - Complex(0.0, 0.05 * b)), 1e-10);
  }
}

TEST(Dynamics, AnnulusIsStationary) {
  const SpectralGrid g(256);
  const double b1 = 0.8, b2 = 0.35;
  const std::vector<FourierContour> cs{FourierContour::circle(b1, 1, 3), FourierContour::circle(b2, 1, 3)};
  const EvolutionState s = EvolutionState::from_contours(cs, g);
  const auto v = node_velocities(s.nodes, 1);
  for (int b = 0; b < 2; ++b) {
    const SampledCurve sc = sample(cs[b], g);
    for (int i = 0; i < 256; ++i) EXPECT_LE(std::abs(normal_part(v[b][i], sc.dz[i])), 1e-10);
  }
  // enclosed circulation: pi (b1^2 - b2^2) at the outer circle, none at the inner one
  EXPECT_LE(std::abs(v[0][0] - Complex(0.0, (b1 * b1 - b2 * b2) / (2.0 * b1))), 1e-10);
  EXPECT_LE(std::abs(v[1][0]), 1e-10);
}

TEST(Dynamics, VStateMovesRigidlyInTheNormalDirection) {
  for (const char* name : {"sc_m4_b0.8_omega0.39.json", "dc_m4_b0.8_0.53_omega0.15.json"}) {
    const auto st = oracle::load(name);
    const SpectralGrid g(*st.node_count);
    const EvolutionState s = EvolutionState::from_contours(st.contours, g);
    const auto v = node_velocities(s.nodes, st.contours[0].m);
    double worst = 0.0;
    for (std::size_t b = 0; b < st.contours.size(); ++b) {
      const SampledCurve sc = sample(st.contours[b], g);
      for (int i = 0; i < g.node_count(); ++i) {
        const Complex rigid = Complex(0.0, *st.omega) * sc.z[i];
        worst = std::max(worst, std::abs(normal_part(v[b][i] - rigid, sc.dz[i])));
      }
    }
    EXPECT_LE(worst, 1e-8) << name;
  }
}

TEST(Dynamics, FoldReductionMatchesFullEvaluation) {
  const auto st = oracle::load("sc_m4_b0.8_omega0.39.json");
  const EvolutionState s = EvolutionState::from_contours(st.contours, SpectralGrid(*st.node_count));
  const auto reduced = node_velocities(s.nodes, 4);
  const auto full = node_velocities(s.nodes, 1);
  for (std::size_t i = 0; i < full[0].size(); ++i) EXPECT_LE(std::abs(reduced[0][i] - full[0][i]), 1e-14);
}

TEST(Dynamics, DistanceToCurve) {
  const FourierContour c(0.6, 3, {0.05, -0.01});
  for (double t : {0.0, 0.3, 1.1, 2.9}) {
    const Complex z = eval_boundary(c, t);
    EXPECT_LE(distance_to_curve(c, z), 1e-15);
    const Complex n = Complex(0.0, -1.0) * eval_tangent(c, t) / std::abs(eval_tangent(c, t));
    EXPECT_NEAR(distance_to_curve(c, z + 1e-4 * n), 1e-4, 1e-12);
  }
  EXPECT_NEAR(distance_to_curve(FourierContour::circle(0.5, 1, 2), Complex(0.0, 0.7)), 0.2, 1e-14);
}

TEST(Dynamics, CircleRigidCheck) {
  const auto rep = evolve_rigid_check({FourierContour::circle(0.6, 1, 3)}, 0.37, 1.0, 100, SpectralGrid(128));
  EXPECT_LE(rep.max_set_deviation, 1e-10);
  EXPECT_LE(rep.area_drift, 1e-12);
  EXPECT_NEAR(rep.final_time, 1.0, 1e-14);
}

TEST(Dynamics, AnnulusSetVersusNodeComparison) {
  const std::vector<FourierContour> cs{FourierContour::circle(0.8, 2, 3), FourierContour::circle(0.4, 2, 3)};
  const auto rep = evolve_rigid_check(cs, 0.05, 2.0, 100, SpectralGrid(128));
  EXPECT_LE(rep.max_set_deviation, 1e-10);
  EXPECT_GT(rep.max_node_drift, 1e-2);
}

TEST(Dynamics, FixtureRotatesRigidlyOverOnePeriod) {
  const auto st = oracle::load("sc_m4_b0.8_omega0.39.json");
  const double period = kTwoPi / (4.0 * *st.omega);
  const auto rep = evolve_rigid_check(st.contours, *st.omega, period, 2000, SpectralGrid(*st.node_count));
  EXPECT_LE(rep.max_set_deviation, 1e-5);
  EXPECT_LE(rep.area_drift, 1e-8);
  EXPECT_GT(rep.max_node_drift, 1e-3);
}

TEST(Dynamics, ThreeFoldFixtureRotatesRigidly) {
  const auto st = oracle::load("sc_m3_b0.8_omega0.3765_0.json");
  const double period = kTwoPi / (3.0 * *st.omega);
  const auto rep = evolve_rigid_check(st.contours, *st.omega, period, 2000, SpectralGrid(*st.node_count));
  EXPECT_LE(rep.max_set_deviation, 1e-5);
  EXPECT_LE(rep.area_drift, 1e-8);
}

TEST(Dynamics, FourthOrderInTime) {
  const auto st = oracle::load("sc_m4_b0.8_omega0.39.json");
  const double period = kTwoPi / (4.0 * *st.omega);
  const SpectralGrid g(*st.node_count);
  // set deviation while the time error still dominates the spatial floor
  const double coarse = evolve_rigid_check(st.contours, *st.omega, period, 50, g).max_set_deviation;
  const double fine = evolve_rigid_check(st.contours, *st.omega, period, 100, g).max_set_deviation;
  EXPECT_NEAR(coarse / fine, 16.0, 16.0 * 0.3);
  EXPECT_NEAR(step_halving_ratio(st.contours, period, 25, g), 16.0, 16.0 * 0.3);
}

TEST(Dynamics, EvolveMatchesRigidCheckEndpoint) {
  const std::vector<FourierContour> cs{FourierContour::circle(0.6, 2, 3)};
  const EvolutionState s = evolve(cs, 0.5, 20, SpectralGrid(32));
  EXPECT_NEAR(s.time, 0.5, 1e-14);
  // a circle turns at its own tangential speed 1/2
  const Complex expected = std::polar(1.0, 0.25) * s.initial[0][0];
  EXPECT_LE(std::abs(s.nodes[0][0] - expected), 1e-8);
  EXPECT_THROW(evolve(cs, 0.5, 0, SpectralGrid(32)), ConfigurationError);
}

TEST(Dynamics, UnderResolvedStepLeavesTheDisc) {
  try {
    evolve_rigid_check({FourierContour::circle(0.95, 1, 3)}, 0.5, 1000.0, 1, SpectralGrid(32));
    FAIL() << "expected an instability";
  } catch (const InstabilityError& e) {
    EXPECT_GT(e.time(), 0.0);
  }
  EXPECT_THROW(boundary_velocity(EvolutionState::from_contours({FourierContour::circle(0.5, 1, 3)}, SpectralGrid(16)),
                                 Complex(1.0, 0.0)),
               DomainViolation);
  EXPECT_THROW(evolve_rigid_check({FourierContour::circle(0.5, 1, 3)}, 0.1, 1.0, 0, SpectralGrid(16)),
               ConfigurationError);
}

TEST(Dynamics, ObserverSeesSampledTimes) {
  std::vector<double> times;
  evolve_rigid_check({FourierContour::circle(0.5, 1, 3)}, 0.1, 1.0, 40, SpectralGrid(16), 4,
                     [&](const EvolutionState& s) { times.push_back(s.time); });
  ASSERT_EQ(times.size(), 5u);
  EXPECT_EQ(times.front(), 0.0);
  EXPECT_NEAR(times.back(), 1.0, 1e-14);
}
