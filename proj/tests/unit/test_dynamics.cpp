#include <gtest/gtest.h>

#include <cmath>

#include "nlc2/dynamics.hpp"
#include "nlc2/errors.hpp"
#include "oracles.hpp"

using namespace nlc2;

namespace {

ScalarField sample(const TorusGrid& g, double (*f)(double, double)) {
  return ScalarField::from_function(g, [f](double x, double y) { return f(x, y); });
}

State constant_state(const TorusGrid& g) {
  State s(g);
  s.d[2] = ScalarField(g, 1.0);
  s.theta = ScalarField(g, 1.0);
  return s;
}

State taylor_green(const TorusGrid& g) {
  State s = constant_state(g);
  s.u[0] = sample(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
  s.u[1] = sample(g, [](double x, double y) { return -std::cos(x) * std::sin(y); });
  return s;
}

// d = (cos x, sin x, 0): |grad d|^2 = 1 and Lap d = -d.
State planar_director(const TorusGrid& g) {
  State s = constant_state(g);
  s.d[0] = sample(g, [](double x, double) { return std::cos(x); });
  s.d[1] = sample(g, [](double x, double) { return std::sin(x); });
  s.d[2] = ScalarField(g);
  return s;
}

State shear(const TorusGrid& g) {
  State s = constant_state(g);
  s.u[0] = sample(g, [](double, double y) { return std::sin(y); });
  return s;
}

ApproximationParams with_M(double M) {
  ApproximationParams p;
  p.M = M;
  return p;
}

}  // namespace

TEST(Cutoff, LinearAndSaturatedBranches) {
  EXPECT_EQ(chi_cutoff(2.0, 4.0), 2.0);
  EXPECT_EQ(chi_cutoff(5.0, 2.0), 2.0);
  for (double M : {0.5, 1.0, 10.0, kInfinity}) EXPECT_EQ(chi_cutoff(0.0, M), 0.0);
  EXPECT_EQ(chi_cutoff(3.0, kInfinity), 3.0);
  EXPECT_THROW(chi_cutoff(-1.0, 1.0), DomainError);
}

TEST(Viscosity, FamiliesStayWithinBounds) {
  const auto a = ViscosityModel::affine_clamped(0.5, 0.5, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(a(1.0), 1.0);
  EXPECT_DOUBLE_EQ(a(10.0), 2.0);
  EXPECT_DOUBLE_EQ(a(-10.0), 0.5);
  const auto r = ViscosityModel::rational_bounded(1.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(r(1.0), 2.0);
  ViscosityModel bad = ViscosityModel::constant(1.0);
  bad.mu_lower = 2.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Stress, ZeroVelocityGivesZeroStress) {
  const TorusGrid g(16, 16);
  const auto st = assemble_stress(constant_state(g), ApproximationParams{});
  EXPECT_EQ(max_abs(st.s_n), 0.0);
  EXPECT_EQ(max_abs(st.sigma_nd), 0.0);
}

TEST(Stress, ShearFlowAtYZero) {
  const TorusGrid g(32, 32);
  const auto s = shear(g);
  const auto st = assemble_stress(s, ApproximationParams{});
  const int j0 = 16;  // y = 0
  for (int i = 0; i < g.nx(); ++i) {
    EXPECT_NEAR(st.strain[0](i, j0), 0.0, 1e-14);
    EXPECT_NEAR(st.strain[1](i, j0), 1.0, 1e-14);
    EXPECT_NEAR(st.strain[2](i, j0), 1.0, 1e-14);
    EXPECT_NEAR(st.strain[3](i, j0), 0.0, 1e-14);
    EXPECT_NEAR(st.s_n[1](i, j0), 1.0, 1e-14);
  }
  // strain against the collocation derivative of u1
  const auto uy = oracle::dy(s.u[0]);
  EXPECT_LT(oracle::max_diff(st.strain[1], uy), 1e-12);
}

TEST(Stress, PowerLawTermScalesWithInverseN) {
  const TorusGrid g(32, 32);
  auto p = ApproximationParams{};
  p.N = 10.0;
  const auto s = shear(g);
  const auto st = assemble_stress(s, p);
  // at y = 0 the gradient is |cos y| = 1: (1/N) * 1 * d_y u_1 on top of mu strain
  EXPECT_NEAR(st.s_n[1](3, 16), 1.0 + 0.1, 1e-13);
  EXPECT_NEAR(st.s_n[2](3, 16), 1.0, 1e-13);
}

TEST(Stress, ConstantDirectorHasNoElasticStress) {
  const TorusGrid g(16, 16);
  auto s = taylor_green(g);
  EXPECT_EQ(max_abs(assemble_stress(s, ApproximationParams{}).sigma_nd), 0.0);
}

TEST(DirectorRhs, ConstantDirectorIsSteady) {
  const TorusGrid g(16, 16);
  EXPECT_LT(max_abs(director_rhs(constant_state(g), ApproximationParams{})), 1e-15);
}

TEST(DirectorRhs, HarmonicMapIsSteadyForLargeM) {
  const TorusGrid g(32, 32);
  const auto s = planar_director(g);
  for (double M : {1.0, 4.0, kInfinity}) {
    const auto r = director_rhs(s, with_M(M));
    // oracle: collocation Laplacian plus |grad d|^2 d
    for (std::size_t a = 0; a < 3; ++a) {
      auto expected = oracle::lap(s.d[a]);
      expected += s.d[a];
      EXPECT_LT(oracle::max_diff(r[a], expected), 1e-8);
      EXPECT_LT(max_abs(r[a]), 1e-8);
    }
  }
}

TEST(DirectorRhs, SaturatedCutoffLeavesHalfTheTension) {
  const TorusGrid g(32, 32);
  const auto s = planar_director(g);
  const auto r = director_rhs(s, with_M(0.5));
  for (std::size_t a = 0; a < 2; ++a) {
    auto expected = oracle::lap(s.d[a]);
    expected += 0.5 * s.d[a];
    EXPECT_LT(oracle::max_diff(r[a], expected), 1e-8);
    EXPECT_LT(oracle::max_diff(r[a], -0.5 * s.d[a]), 1e-8);
  }
}

TEST(DirectorRhs, ConstrainedTensionDropsTheNormalPart) {
  const TorusGrid g(32, 32);
  auto s = planar_director(g);
  // scaled director: Lap d + |grad d|^2 d has a normal part when |d| != 1
  for (std::size_t a = 0; a < 3; ++a) s.d[a] *= 0.9;
  auto p = ApproximationParams{};
  p.mode = DirectorMode::constrained;
  const auto der = differentiate(s);
  const auto t = director_tension(s, der, p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double dot = t[0][k] * s.d[0][k] + t[1][k] * s.d[1][k] + t[2][k] * s.d[2][k];
    EXPECT_NEAR(dot, 0.0, 1e-12);
  }
  p.mode = DirectorMode::relaxed;
  EXPECT_GT(max_abs(director_tension(s, der, p)), 0.1);
}

TEST(MomentumRhs, TaylorGreenDecaysAtRateTwo) {
  const TorusGrid g(32, 32);
  const auto s = taylor_green(g);
  const auto r = momentum_rhs(s, ApproximationParams{});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT(oracle::max_diff(r[i], oracle::lap(s.u[i])), 1e-8);
    EXPECT_LT(oracle::max_diff(r[i], -2.0 * s.u[i]), 1e-8);
  }
}

TEST(MomentumRhs, HarmonicDirectorExertsNoForce) {
  const TorusGrid g(32, 32);
  const auto s = planar_director(g);
  EXPECT_LT(max_abs(momentum_rhs(s, ApproximationParams{})), 1e-8);
  EXPECT_LT(max_abs(momentum_rhs_stress_form(s, ApproximationParams{})), 1e-8);
}

TEST(MomentumRhs, ForceAndStressFormsAgree) {
  const TorusGrid g(48, 48);
  State s = constant_state(g);
  s.d[0] = random_bandlimited(g, 4, 0.3, 1);
  s.d[1] = random_bandlimited(g, 4, 0.3, 2);
  s.u[0] = random_bandlimited(g, 4, 0.5, 3);
  s.u[1] = random_bandlimited(g, 4, 0.5, 4);
  s.u = leray_project(s.u);
  const auto a = momentum_rhs(s, ApproximationParams{});
  const auto b = momentum_rhs_stress_form(s, ApproximationParams{});
  EXPECT_LT(max_abs(a[0] - b[0]), 1e-10);
  EXPECT_LT(max_abs(a[1] - b[1]), 1e-10);
}

TEST(HeatSource, VanishesAtRest) {
  const TorusGrid g(16, 16);
  EXPECT_LT(max_abs(heat_source(constant_state(g), ApproximationParams{})), 1e-15);
}

TEST(HeatSource, ShearFlowIntegral) {
  const TorusGrid g(32, 32);
  const auto q = heat_source(shear(g), ApproximationParams{});
  EXPECT_LT(oracle::max_diff(q, sample(g, [](double, double y) { return std::cos(y) * std::cos(y); })),
            1e-13);
  const double exact = oracle::integrate([](double, double y) { return std::cos(y) * std::cos(y); });
  EXPECT_NEAR(integral(q), exact, 1e-10);
  EXPECT_NEAR(exact, 2 * oracle::kPi * oracle::kPi, 1e-10);
}

TEST(HeatSource, HarmonicDirectorDissipatesNothing) {
  const TorusGrid g(32, 32);
  EXPECT_LT(max_abs(heat_source(planar_director(g), with_M(1.0))), 1e-14);
}

TEST(TemperatureRhs, PureDiffusion) {
  const TorusGrid g(32, 32);
  auto s = constant_state(g);
  s.theta = sample(g, [](double x, double) { return 2 + std::cos(x); });
  EXPECT_LT(oracle::max_diff(temperature_rhs(s, ApproximationParams{}),
                             sample(g, [](double x, double) { return -std::cos(x); })),
            1e-13);
}

TEST(TemperatureRhs, TaylorGreenHeatingMatchesQuadrature) {
  const TorusGrid g(64, 64);
  const auto r = temperature_rhs(taylor_green(g), ApproximationParams{});
  auto q = [](double x, double y) { return 4 * std::pow(std::cos(x) * std::cos(y), 2); };
  EXPECT_LT(oracle::max_diff(r, ScalarField::from_function(g, q)), 1e-12);
  EXPECT_NEAR(integral(r), oracle::integrate(q), 1e-10);
}

TEST(Pressure, TrivialStateHasZeroPressure) {
  const TorusGrid g(16, 16);
  EXPECT_EQ(max_abs(pressure_solve(constant_state(g), ApproximationParams{})), 0.0);
}

TEST(Pressure, TaylorGreenAgainstDenseSolve) {
  const TorusGrid g(16, 16);
  const auto s = taylor_green(g);
  const auto p = pressure_solve(s, ApproximationParams{});
  // oracle: Lap p = -d_i d_j (u_i u_j) with collocation derivatives
  const auto uu = hadamard(s.u[0], s.u[0]), uv = hadamard(s.u[0], s.u[1]), vv = hadamard(s.u[1], s.u[1]);
  auto rhs = oracle::dx(oracle::dx(uu));
  rhs += 2.0 * oracle::dx(oracle::dy(uv));
  rhs += oracle::dy(oracle::dy(vv));
  rhs *= -1.0;
  EXPECT_LT(oracle::max_diff(p, oracle::poisson(rhs)), 1e-8);
  const auto exact = sample(g, [](double x, double y) { return (std::cos(2 * x) + std::cos(2 * y)) / 4; });
  EXPECT_LT(oracle::max_diff(p, exact), 1e-13);
}

TEST(Pressure, PlanarDirectorHasUniformStress) {
  const TorusGrid g(16, 16);
  const auto s = planar_director(g);
  // grad d (.) grad d = diag(1, 0) is constant, so div div vanishes
  EXPECT_LT(max_abs(pressure_solve(s, ApproximationParams{})), 1e-13);
}

TEST(Renormalize, UnitFieldUnchanged) {
  const TorusGrid g(16, 16);
  const auto s = planar_director(g);
  const auto d = renormalize_director(s.d);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_LT(oracle::max_diff(d[a], s.d[a]), 1e-15);
}

TEST(Renormalize, ScaledFieldsReturnToTheSphere) {
  const TorusGrid g(16, 16);
  DirectorField d(g);
  d[0] = ScalarField(g, 2.0);
  EXPECT_EQ(max_abs(renormalize_director(d)[0] - ScalarField(g, 1.0)), 0.0);
  const auto scale = sample(g, [](double x, double) { return 1 + 0.1 * std::sin(x); });
  d[0] = 0.6 * scale;
  d[1] = 0.8 * scale;
  const auto r = renormalize_director(d);
  EXPECT_LT(max_abs(r[0] - ScalarField(g, 0.6)), 1e-15);
  EXPECT_LT(max_abs(r[1] - ScalarField(g, 0.8)), 1e-15);
  EXPECT_EQ(max_abs(r[2]), 0.0);
}

TEST(Renormalize, NearZeroDirectorIsDegenerate) {
  const TorusGrid g(16, 16);
  DirectorField d(g);
  d[2] = ScalarField(g, 1.0);
  d[2](3, 4) = 0.05;
  EXPECT_THROW(renormalize_director(d), DegenerateDirectorError);
}

TEST(Params, ValidationRejectsBadValues) {
  const TorusGrid g(16, 16);
  ApproximationParams p;
  p.M = 0.0;
  EXPECT_THROW(p.validate(g), ConfigError);
  p.M = 1.0;
  p.N = -1.0;
  EXPECT_THROW(p.validate(g), ConfigError);
  p.N = kInfinity;
  p.n = 100;
  EXPECT_THROW(p.validate(g), ConfigError);
}
