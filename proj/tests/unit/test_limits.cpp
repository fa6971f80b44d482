#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "nlc2/errors.hpp"
#include "nlc2/limits.hpp"

using namespace nlc2;

namespace {

RunConfig smooth_base(int n) {
  RunConfig c;
  c.nx = c.ny = n;
  c.params.M = 10;
  c.params.viscosity = ViscosityModel::affine_clamped(0.5, 0.5, 0.5, 2.0);
  c.scheme.dt = 2e-3;
  c.scheme.t_end = 0.5;
  c.ic.kind = InitialKind::taylor_green;
  c.ic.director_tilt = 0.3;
  return c;
}

RunConfig defect_pair(int polarity, double t_end) {
  RunConfig c;
  c.nx = c.ny = 64;
  c.params.mode = DirectorMode::constrained;
  c.scheme.dt = 2e-3;
  c.scheme.t_end = t_end;
  c.ic.kind = InitialKind::defect_pair;
  c.ic.polarity = polarity;
  return c;
}

ContinuationOptions options(const RunConfig& c, double eps0_factor = 1.0) {
  ContinuationOptions o;
  o.eps0 = eps0_factor * calibrate_eps0(c.grid());
  return o;
}

}  // namespace

TEST(Fit, RecoversExactPowerLaw) {
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
  const auto f = fit_loglog(x, y);
  EXPECT_EQ(f.points, 4u);
  EXPECT_NEAR(f.slope, -1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_LT(f.residual, 1e-12);
}

TEST(Fit, SkipsNonPositivePoints) {
  const auto f = fit_loglog({1, 2, 4}, {0.0, 1.0, 2.0});
  EXPECT_EQ(f.points, 2u);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_FALSE(fit_loglog({1}, {1}).valid());
}

TEST(Study, CutoffAboveTheGradientIsInactive) {
  StudyConfig sc;
  sc.base = smooth_base(32);
  sc.base.scheme.t_end = 0.2;
  sc.vary = StudyParameter::M;
  sc.ladder = {5, 10, 20};
  sc.samples = 4;
  const auto rep = run_study(sc);
  ASSERT_TRUE(rep.all_completed());
  for (const auto& l : rep.levels) EXPECT_LT(l.diff_u, 1e-10) << "M = " << l.value;
}

TEST(Study, PowerLawTermConvergesAtFirstOrder) {
  StudyConfig sc;
  sc.base = smooth_base(32);
  sc.vary = StudyParameter::N;
  sc.ladder = {10, 100, 1000};
  sc.samples = 10;
  const auto rep = run_study(sc);
  ASSERT_TRUE(rep.all_completed());
  EXPECT_NEAR(rep.rate_u.slope, -1.0, 0.15);
  EXPECT_TRUE(rep.monotone);
  EXPECT_NE(rep.csv().find("diff_u"), std::string::npos);
}

TEST(Study, InvalidConfigIsRejected) {
  StudyConfig sc;
  sc.base = smooth_base(16);
  sc.ladder = {10, 100};
  EXPECT_THROW(sc.validate(), ConfigError);
  sc.ladder = {10, 100, 1000};
  sc.q = 1.5;
  EXPECT_THROW(sc.validate(), ConfigError);
}

TEST(Threads, EnvironmentOverride) {
  ::setenv("NLC2_THREADS", "3", 1);
  EXPECT_EQ(worker_threads(), 3u);
  ::setenv("NLC2_THREADS", "0", 1);
  EXPECT_GE(worker_threads(), 1u);
  ::unsetenv("NLC2_THREADS");
}

TEST(Continuation, SmoothDataRaiseNoFlags) {
  auto c = smooth_base(64);
  c.params = ApproximationParams{};
  c.params.mode = DirectorMode::constrained;
  c.ic.director_tilt = 0.3;
  c.scheme.t_end = 0.2;
  const auto rep = continuation_run(c, options(c));
  EXPECT_EQ(rep.flags(), 0u);
  EXPECT_TRUE(rep.reached_t_end);
  EXPECT_EQ(rep.segments.size(), 1u);
}

TEST(Continuation, DefectPairUnwindsWithEnergyGoingToHeat) {
  const auto c = defect_pair(1, 1.0);
  const auto rep = continuation_run(c, options(c));
  ASSERT_GE(rep.flags(), 1u);
  EXPECT_TRUE(rep.bookkeeping_ok);
  for (const auto& e : rep.events) {
    EXPECT_TRUE(e.closed);
    EXPECT_NEAR(e.heat_rise, e.kp_drop, 0.05 * e.kp_drop);
  }
  EXPECT_TRUE(rep.reached_t_end);
}

TEST(Continuation, LargerThresholdNeverFlagsMore) {
  const auto c = defect_pair(1, 1.0);
  const auto a = continuation_run(c, options(c, 1.0));
  const auto b = continuation_run(c, options(c, 2.0));
  EXPECT_LE(b.flags(), a.flags());
}

TEST(Continuation, UnresolvedEventIsInconclusive) {
  const auto c = defect_pair(-1, 1.0);
  auto o = options(c);
  o.max_window_steps = 50;
  EXPECT_THROW(continuation_run(c, o), InconclusiveSegmentError);
}

TEST(Continuation, RequiresConstrainedMode) {
  auto c = defect_pair(1, 0.1);
  c.params.mode = DirectorMode::relaxed;
  EXPECT_THROW(continuation_run(c, options(c)), ConfigError);
}
