#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlc2/diagnostics.hpp"
#include "nlc2/errors.hpp"
#include "oracles.hpp"

using namespace nlc2;

namespace {

constexpr double kPi2 = oracle::kPi * oracle::kPi;

State rest_state(const TorusGrid& g, double theta = 1.0) {
  State s(g);
  s.d[2] = ScalarField(g, 1.0);
  s.theta = ScalarField(g, theta);
  return s;
}

State taylor_green(const TorusGrid& g, double tilt = 0.0) {
  State s = rest_state(g);
  s.u[0] = ScalarField::from_function(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
  s.u[1] = ScalarField::from_function(g, [](double x, double y) { return -std::cos(x) * std::sin(y); });
  if (tilt > 0.0) {
    s.d[0] = ScalarField::from_function(g, [tilt](double, double y) { return tilt * std::cos(y); });
    s.d[1] = ScalarField::from_function(g, [tilt](double x, double) { return tilt * std::sin(x); });
    s.d = renormalize_director(s.d);
  }
  s.p = pressure_solve(s, ApproximationParams{});
  return s;
}

State planar_director(const TorusGrid& g, int k = 1) {
  State s = rest_state(g);
  s.d[0] = ScalarField::from_function(g, [k](double x, double) { return std::cos(k * x); });
  s.d[1] = ScalarField::from_function(g, [k](double x, double) { return std::sin(k * x); });
  s.d[2] = ScalarField(g);
  return s;
}

SchemeConfig scheme(double dt, double t_end) {
  SchemeConfig sc;
  sc.dt = dt;
  sc.t_end = t_end;
  return sc;
}

std::vector<State> trajectory(const State& s0, const ApproximationParams& p, double dt, double T,
                              std::size_t stride) {
  std::vector<State> out;
  RunCallbacks cb;
  cb.sample_stride = stride;
  cb.on_sample = [&](const State& s, const StepReport*) { out.push_back(s); };
  run(s0, p, scheme(dt, T), cb);
  return out;
}

}  // namespace

TEST(Energies, RestStateHoldsOnlyHeat) {
  const auto e = energies(rest_state(TorusGrid(16, 16)), ApproximationParams{});
  EXPECT_EQ(e.kinetic, 0.0);
  EXPECT_EQ(e.potential, 0.0);
  EXPECT_NEAR(e.heat, 4 * kPi2, 1e-12);
  EXPECT_NEAR(e.total, 4 * kPi2, 1e-12);
  EXPECT_EQ(e.dissipation_rate, 0.0);
}

TEST(Energies, ShearKineticEnergy) {
  const TorusGrid g(32, 32);
  State s = rest_state(g);
  s.u[0] = ScalarField::from_function(g, [](double, double y) { return std::sin(y); });
  const double exact = oracle::integrate([](double, double y) { return 0.5 * std::sin(y) * std::sin(y); });
  const auto e = energies(s, ApproximationParams{});
  EXPECT_NEAR(e.kinetic, exact, 1e-10);
  EXPECT_NEAR(e.kinetic, kPi2, 1e-10);
}

TEST(Energies, PlanarDirectorPotentialEnergy) {
  const auto e = energies(planar_director(TorusGrid(32, 32)), ApproximationParams{});
  EXPECT_NEAR(e.potential, 2 * kPi2, 1e-10);
}

TEST(Drift, ConstantSeriesHasNoDrift) {
  std::vector<EnergyRecord> series(5, EnergyRecord{0, 1, 2, 3, 6, 0});
  for (std::size_t i = 0; i < series.size(); ++i) series[i].t = 0.1 * i;
  const auto d = conservation_drift(series);
  EXPECT_EQ(d.max_relative_drift, 0.0);
  EXPECT_EQ(d.balance_residual, 0.0);
  EXPECT_FALSE(d.flagged);
  EXPECT_THROW(conservation_drift({}), UsageError);
}

TEST(Drift, ScaledHeatIsFlagged) {
  std::vector<EnergyRecord> series;
  for (int i = 0; i < 4; ++i) {
    EnergyRecord e{0.1 * i, 1.0, 1.0, 8.0, 10.0, 0.0};
    if (i == 3) {
      e.heat *= 1.01;
      e.total = e.kinetic + e.potential + e.heat;
    }
    series.push_back(e);
  }
  const auto d = conservation_drift(series);
  EXPECT_NEAR(d.max_relative_drift, 0.01 * 0.8, 1e-12);
  EXPECT_TRUE(d.flagged);
}

TEST(Drift, TaylorGreenDecayConservesTotalEnergy) {
  const TorusGrid g(64, 64);
  ApproximationParams p;
  std::vector<EnergyRecord> series;
  RunCallbacks cb;
  cb.sample_stride = 5;
  cb.on_sample = [&](const State& s, const StepReport*) { series.push_back(energies(s, p)); };
  run(taylor_green(g), p, scheme(1e-3, 0.25), cb);
  const auto d = conservation_drift(series);
  EXPECT_LT(d.max_relative_drift, 1e-5);
  EXPECT_LT(d.balance_relative, 1e-3);
}

TEST(Entropy, ConstantStateHasZeroResidual) {
  const TorusGrid g(16, 16);
  State a = rest_state(g, 2.0), b = a, c = a;
  b.t = 0.1;
  c.t = 0.2;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto r = entropy_residual(a, b, c, alpha, ApproximationParams{});
    EXPECT_LT(std::max(std::abs(r.min), std::abs(r.max)), 1e-15);
  }
}

TEST(Entropy, SingleNodeHandEvaluation) {
  const TorusGrid g(64, 64);
  State mid = rest_state(g);
  mid.theta = ScalarField::from_function(g, [](double x, double) { return 2 + 0.5 * std::cos(x); });
  mid.u[1] = ScalarField(g, 0.3);  // uniform flow along y: no heating, no x-advection
  mid.t = 0.1;
  State prev = mid, next = mid;
  prev.t = 0.0;
  next.t = 0.2;
  for (std::size_t k = 0; k < g.size(); ++k) {
    prev.theta[k] -= 0.01;
    next.theta[k] += 0.01;
  }
  const int i = 20, j = 7;
  const double x = g.x(i);
  const double th = 2 + 0.5 * std::cos(x), th_x = -0.5 * std::sin(x), th_xx = -0.5 * std::cos(x);
  for (double a : {0.25, 0.75}) {
    const double dt = (std::pow(th + 0.01, a) - std::pow(th - 0.01, a)) / 0.2;
    const double lap = a * (a - 1) * std::pow(th, a - 2) * th_x * th_x + a * std::pow(th, a - 1) * th_xx;
    const double src = a * (1 - a) * std::pow(th, a - 2) * th_x * th_x;
    const double hand = dt - lap - src;
    const auto r = entropy_residual(prev, mid, next, a, ApproximationParams{});
    EXPECT_NEAR(r.field(i, j), hand, 1e-12) << "alpha " << a;
  }
}

TEST(Entropy, NonPositiveTemperatureIsRejected) {
  const TorusGrid g(16, 16);
  State a = rest_state(g), b = a, c = a;
  b.t = 0.1;
  c.t = 0.2;
  b.theta(2, 2) = -1.0;
  EXPECT_THROW(entropy_residual(a, b, c, 0.5, ApproximationParams{}), PositivityError);
  EXPECT_THROW(entropy_residual(a, a, c, 0.5, ApproximationParams{}), UsageError);
}

TEST(Entropy, ResidualShrinksUnderRefinement) {
  ApproximationParams p;
  auto worst = [&](int n, double dt) {
    const TorusGrid g(n, n);
    const auto traj = trajectory(taylor_green(g, 0.3), p, dt, 0.1, 1);
    const std::size_t m = traj.size() / 2;
    return entropy_residual(traj[m - 1], traj[m], traj[m + 1], 0.5, p).min;
  };
  const double coarse = worst(32, 4e-3), fine = worst(64, 2e-3);
  EXPECT_LT(std::abs(fine), 0.5 * std::abs(coarse));
}

TEST(WeakForm, RestStateHasZeroResiduals) {
  const TorusGrid g(32, 32);
  std::vector<State> traj;
  for (int i = 0; i <= 4; ++i) {
    traj.push_back(rest_state(g));
    traj.back().t = 0.25 * i;
  }
  for (const auto& r : weak_form_residual(traj, ApproximationParams{}, default_test_bank(1.0))) {
    EXPECT_LT(std::abs(r.momentum), 1e-13) << r.name;
    EXPECT_LT(std::abs(r.temperature), 1e-11) << r.name;
  }
}

TEST(WeakForm, NegatedTestFunctionNegatesResidual) {
  const TorusGrid g(32, 32);
  ApproximationParams p;
  const auto traj = trajectory(taylor_green(g, 0.3), p, 0.01, 0.2, 2);
  auto bank = default_test_bank(0.2);
  bank.resize(2);
  auto negated = bank;
  for (auto& f : negated) {
    auto v = f.vector_part;
    auto s = f.scalar_part;
    f.vector_part = [v](double x, double y) {
      auto r = v(x, y);
      return std::array<double, 2>{-r[0], -r[1]};
    };
    f.scalar_part = [s](double x, double y) { return -s(x, y); };
  }
  const auto a = weak_form_residual(traj, p, bank);
  const auto b = weak_form_residual(traj, p, negated);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].momentum, -b[i].momentum, 1e-14);
    EXPECT_NEAR(a[i].temperature, -b[i].temperature, 1e-13);
  }
}

TEST(WeakForm, ResolvedRunSatisfiesBothIdentities) {
  const TorusGrid g(32, 32);
  ApproximationParams p;
  p.viscosity = ViscosityModel::affine_clamped(0.5, 0.5, 0.5, 2.0);
  p.M = 10;
  p.N = 100;
  const auto res = weak_form_residual(trajectory(taylor_green(g, 0.3), p, 2e-3, 0.5, 1), p,
                                      default_test_bank(0.5));
  ASSERT_EQ(res.size(), 8u);
  for (const auto& r : res) {
    EXPECT_LT(r.momentum_relative(), 1e-3) << r.name;
    EXPECT_LT(r.temperature_relative(), 1e-3) << r.name;
  }
}

TEST(WeakForm, CompressibleTestFunctionIsRejected) {
  auto bank = default_test_bank(1.0);
  bank[0].vector_part = [](double x, double) { return std::array<double, 2>{std::sin(x), 0.0}; };
  EXPECT_THROW(WeakFormAccumulator(TorusGrid(32, 32), ApproximationParams{}, bank), ConfigError);
}

TEST(MaximumPrinciple, BoundaryCaseAndViolation) {
  const TorusGrid g(16, 16);
  State s = rest_state(g, 1.5);
  auto r = maximum_principle_check(s, 1.5);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.theta_margin, 0.0, 1e-15);
  EXPECT_NEAR(r.director_margin, 0.0, 1e-15);
  s.theta(3, 5) = 0.75;
  r = maximum_principle_check(s, 1.5);
  EXPECT_FALSE(r.theta_ok);
  EXPECT_NEAR(r.theta_margin, -0.75, 1e-15);
}

TEST(MaximumPrinciple, RelaxedRunKeepsDirectorInTheBall) {
  const TorusGrid g(32, 32);
  ApproximationParams p;
  p.M = 10;
  for (const auto& s : trajectory(taylor_green(g, 0.3), p, 1e-3, 0.5, 50)) {
    const auto mp = maximum_principle_check(s, 1.0);
    EXPECT_TRUE(mp.passed()) << "t=" << s.t << " theta " << mp.theta_margin << " dir " << mp.director_margin;
  }
}

TEST(Concentration, RestStateIsNotFlagged) {
  const auto r = local_energy_sup(rest_state(TorusGrid(64, 64)), 0.5, 1.0);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_FALSE(r.flagged);
}

TEST(Concentration, BumpOfTwiceTheThresholdIsFlagged) {
  const TorusGrid g(128, 128);
  const double eps0 = 1.0, r = 0.8, s = r / 8;
  // u1 carries |u|^2 = bump of mass 2 eps0^2 concentrated well inside r/2
  State st = rest_state(g);
  st.u[0] = ScalarField::from_function(g, [&](double x, double y) {
    const double b = 2 * eps0 * eps0 * std::exp(-(x * x + y * y) / (2 * s * s)) / (2 * oracle::kPi * s * s);
    return std::sqrt(b);
  });
  const auto rep = local_energy_sup(st, r, eps0);
  EXPECT_TRUE(rep.flagged);
  EXPECT_NEAR(rep.value, 2.0, 0.02);
  EXPECT_NEAR(rep.x, 0.0, g.h());
  EXPECT_NEAR(rep.y, 0.0, g.h());
}

TEST(Concentration, UniformDensityScalesWithBallArea) {
  const TorusGrid g(64, 64);
  State s = rest_state(g);
  s.u[0] = ScalarField(g, 0.5);
  const double e = integral(local_energy_density(s));
  const double r = 0.7;
  EXPECT_NEAR(local_energy_sup(s, r, 10.0).value / (e * r * r / (4 * oracle::kPi)), 1.0, 0.02);
}

TEST(Horizon, FormulaSpotValues) {
  EXPECT_EQ(horizon_tau0(1.0, 1.0), 1.0);
  EXPECT_EQ(horizon_T0(1.0, 0.5), 0.125);
}

TEST(Horizon, ExactScalingOnRandomInputs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double eps0 = u(rng), e0 = u(rng), R0 = u(rng) / 3;
    const double tau0 = horizon_tau0(eps0, e0);
    EXPECT_NEAR(tau0 / std::pow(std::pow(eps0, 4) / e0, 5), 1.0, 1e-14);
    EXPECT_NEAR(horizon_T0(tau0, R0) / (tau0 * R0 * R0 * R0), 1.0, 1e-14);
  }
}

TEST(Horizon, UniformDensityRadiusMatchesClosedForm) {
  const TorusGrid g(64, 64);
  State s = rest_state(g);
  s.u[0] = ScalarField(g, 0.6);
  const double e = integral(local_energy_density(s));
  const double eps0 = 1.0;
  const auto h = horizon_estimate(s, eps0);
  // pi (2 R)^2 e / (4 pi^2) = eps0^2
  const double closed = std::sqrt(eps0 * eps0 * oracle::kPi / e);
  EXPECT_NEAR(h.R0, closed, 2 * g.h());
  EXPECT_NEAR(h.e0, e, 1e-12);
  EXPECT_NEAR(h.T0, h.tau0 * std::pow(h.R0, 3), 1e-14 * h.T0);
}

TEST(Horizon, GridScaleConcentrationIsAnError) {
  const TorusGrid g(32, 32);
  State s = rest_state(g);
  s.u[0](5, 5) = 100.0;
  EXPECT_THROW(horizon_estimate(s, 0.1), GridScaleConcentrationError);
}

TEST(Horizon, CalibratedThresholdIsPositiveAndGridDependent) {
  const double a = calibrate_eps0(TorusGrid(64, 64));
  EXPECT_GT(a, 0.0);
  EXPECT_EQ(a, calibrate_eps0(TorusGrid(64, 64)));
}

TEST(Inequalities, ZeroVelocityHasZeroRatio) {
  const TorusGrid g(32, 32);
  const auto r = korn_ratio(VectorField(g));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(Inequalities, KornShearClosedForm) {
  const TorusGrid g(32, 32);
  VectorField u(g);
  u[0] = ScalarField::from_function(g, [](double, double y) { return std::sin(y); });
  const auto r = korn_ratio(u);
  // |u|^2 + |grad u|^2 integrates to 4 pi^2, |grad u + grad u^T|^2 + |u|^2 to 6 pi^2
  EXPECT_NEAR(r.lhs, 4 * kPi2, 1e-10);
  EXPECT_NEAR(r.rhs, 6 * kPi2, 1e-10);
  EXPECT_NEAR(r.ratio, 2.0 / 3.0, 1e-12);
  EXPECT_LT(r.ratio, 1.5);
}

TEST(Inequalities, LadyzhenskayaStableUnderRefinement) {
  ApproximationParams p;
  auto ratio = [&](int n) {
    const TorusGrid g(n, n);
    return ladyzhenskaya_ratio(trajectory(taylor_green(g), p, 1e-2, 0.2, 5), 1.0).ratio;
  };
  const double a = ratio(32), b = ratio(64);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a / b, 1.0, 0.05);
}

TEST(Inequalities, CalibrationBoundsRandomFields) {
  const double c = inequality_calibration(InequalityKind::korn);
  EXPECT_GT(c, 0.0);
  const TorusGrid g(32, 32);
  VectorField u(g);
  u[0] = random_bandlimited(g, 3, 1.0, 99);
  u[1] = random_bandlimited(g, 3, 1.0, 98);
  EXPECT_TRUE(korn_ratio(leray_project(u)).within_calibration);
}

TEST(CutoffBound, ConstantDirectorIntegratesToZero) {
  const auto r = cutoff_energy_bound_check(rest_state(TorusGrid(16, 16)), 2.0);
  EXPECT_EQ(r.integral, 0.0);
  EXPECT_TRUE(r.within_bound);
}

TEST(CutoffBound, SaturationReachesTheCeiling) {
  // |grad d|^2 = 4 >= M = 1 everywhere
  const auto r = cutoff_energy_bound_check(planar_director(TorusGrid(32, 32), 2), 1.0);
  EXPECT_NEAR(r.integral, 4 * kPi2, 1e-10);
  EXPECT_NEAR(r.bound, 4 * kPi2, 1e-12);
  EXPECT_TRUE(r.within_bound);
}

TEST(CutoffBound, PlanarDirectorWithHalfCutoff) {
  const auto r = cutoff_energy_bound_check(planar_director(TorusGrid(32, 32)), 0.5);
  EXPECT_NEAR(r.integral, kPi2, 1e-10);
}

TEST(HeatBudget, SmoothRunBalancesHeat) {
  const TorusGrid g(32, 32);
  ApproximationParams p;
  HeatBudget hb(p);
  for (const auto& s : trajectory(taylor_green(g, 0.3), p, 2e-3, 0.2, 1)) hb.add(s);
  EXPECT_LT(std::abs(hb.heat_balance()) / hb.heat(), 1e-5);
  EXPECT_GT(hb.gradient_lq(), 0.0);
}

TEST(Recorder, RowsCarryEntropyOnlyBetweenNeighbours) {
  const TorusGrid g(64, 64);
  ApproximationParams p;
  RecorderConfig rc;
  rc.radii = {0.5, 1.0};
  rc.eps0 = 0.5;
  rc.r_monitor = 0.5;
  rc.theta_floor = 1.0;
  DiagnosticsRecorder rec(p, rc);
  for (const auto& s : trajectory(taylor_green(g, 0.3), p, 1e-2, 0.1, 2)) rec.observe(s);
  rec.finish();
  const auto& rows = rec.rows();
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_TRUE(std::isnan(rows.front().entropy_min[0]));
  EXPECT_TRUE(std::isnan(rows.back().entropy_min[0]));
  EXPECT_FALSE(std::isnan(rows[2].entropy_min[1]));
  EXPECT_EQ(rows[1].local_sup.size(), 2u);
  // near (pi/2, 0) |u|^2 ~ 1, so a ball of radius 0.5 holds more than eps0^2
  EXPECT_TRUE(rows.front().flags & kFlagConcentration);
}
