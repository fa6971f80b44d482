#include "nlc2/timestepper.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace nlc2 {

namespace {

bool state_is_finite(const State& s) {
  for (std::size_t i = 0; i < 2; ++i)
    if (!all_finite(s.u[i])) return false;
  for (std::size_t a = 0; a < 3; ++a)
    if (!all_finite(s.d[a])) return false;
  return all_finite(s.theta) && all_finite(s.p);
}

void update_modes(SpectralField& y, const SpectralField& now, const SpectralField* prev,
                  double a, double b, double coefficient, double dt, double w) {
  const auto& g = y.grid();
  for (int j = 0; j < g.ny(); ++j) {
    const double k2y = static_cast<double>(g.ky(j)) * g.ky(j);
    for (int i = 0; i < g.spectral_nx(); ++i) {
      const double ksq = static_cast<double>(g.kx(i)) * g.kx(i) + k2y;
      std::complex<double> f = a * now.at(i, j);
      if (prev != nullptr) f += b * prev->at(i, j);
      y.at(i, j) = diffusion_update(y.at(i, j), f, coefficient * ksq, dt, w);
    }
  }
}

}  // namespace

void SchemeConfig::validate(const ApproximationParams& params) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be >= 0");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0, 1]");
  if (mu_split > 0.0 && mu_split < params.viscosity.mu_upper) {
    throw ConfigError("mu_split must be >= mu_upper for a stable viscosity splitting");
  }
}

StepReport summarize(const State& state, double dt) {
  StepReport r;
  r.dt = dt;
  const auto& g = state.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    r.max_u = std::max(r.max_u, std::hypot(state.u[0][k], state.u[1][k]));
    const double dn = std::sqrt(state.d[0][k] * state.d[0][k] + state.d[1][k] * state.d[1][k] +
                                state.d[2][k] * state.d[2][k]);
    r.max_d_norm_dev = std::max(r.max_d_norm_dev, std::abs(dn - 1.0));
  }
  r.min_theta = min_value(state.theta);
  ScalarField g2(g);
  for (std::size_t a = 0; a < 3; ++a) {
    const auto grad = gradient(state.d[a]);
    for (std::size_t k = 0; k < g.size(); ++k) g2[k] += grad[0][k] * grad[0][k] + grad[1][k] * grad[1][k];
  }
  r.max_grad_d_sq = max_value(g2);
  return r;
}

Stepper::Stepper(ApproximationParams params, SchemeConfig config)
    : params_(std::move(params)), config_(config) {}

double Stepper::next_dt(const State& state) const {
  double dt = config_.dt;
  if (config_.adapt) {
    double umax = 0.0;
    for (std::size_t k = 0; k < state.u[0].size(); ++k)
      umax = std::max(umax, std::hypot(state.u[0][k], state.u[1][k]));
    if (umax > 0.0) dt = std::min(dt, config_.cfl_safety * state.grid().h() / umax);
  }
  const double remaining = config_.t_end - state.t;
  if (remaining <= 0.0) return 0.0;
  if (dt >= remaining * (1.0 - 1e-9)) dt = remaining;
  return dt;
}

StepReport Stepper::advance(State& state) {
  const auto start = std::chrono::steady_clock::now();
  const auto& g = state.grid();
  const double dt = next_dt(state);
  if (!(dt > 0.0)) throw UsageError("state is already at t_end");
  const double mu_s = config_.implicit_viscosity(params_.viscosity);

  auto spec = to_spectral(state);
  auto terms = explicit_terms(state, spec, params_, mu_s);

  const bool two_step = config_.scheme == Scheme::imex2 && history_ && history_->t == state.t;
  double a = 1.0, b = 0.0, w = 1.0;
  if (two_step) {
    const double omega = dt / history_->dt;
    a = 1.0 + 0.5 * omega;
    b = -0.5 * omega;
    w = 0.5;
  }
  const ExplicitTerms* prev = two_step ? &history_->terms : nullptr;

  for (std::size_t i = 0; i < 2; ++i)
    update_modes(spec.u[i], terms.momentum[i], prev ? &prev->momentum[i] : nullptr, a, b, mu_s,
                 dt, w);
  leray_project(spec.u[0], spec.u[1]);
  for (std::size_t c = 0; c < 3; ++c)
    update_modes(spec.d[c], terms.director[c], prev ? &prev->director[c] : nullptr, a, b, 1.0,
                 dt, w);
  update_modes(spec.theta, terms.temperature, prev ? &prev->temperature : nullptr, a, b, 1.0, dt,
               w);

  State next(g);
  for (std::size_t i = 0; i < 2; ++i) next.u[i] = inverse_transform(spec.u[i]);
  for (std::size_t c = 0; c < 3; ++c) next.d[c] = inverse_transform(spec.d[c]);
  next.theta = inverse_transform(spec.theta);
  next.t = dt == config_.t_end - state.t ? config_.t_end : state.t + dt;

  if (!state_is_finite(next)) {
    throw BlowUpError("non-finite field after step from t=" + std::to_string(state.t));
  }
  if (params_.mode == DirectorMode::constrained) next.d = renormalize_director(next.d);
  next.p = pressure_solve(next, params_);
  if (!state_is_finite(next)) {
    throw BlowUpError("non-finite pressure after step from t=" + std::to_string(state.t));
  }

  history_ = History{std::move(terms), dt, next.t};
  state = std::move(next);
  auto report = summarize(state, dt);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::pair<State, StepReport> Stepper::step(const State& state) {
  State next = state;
  auto report = advance(next);
  return {std::move(next), report};
}

Trajectory run(const State& initial, const ApproximationParams& params,
               const SchemeConfig& config, const RunCallbacks& callbacks) {
  params.validate(initial.grid());
  config.validate(params);
  Stepper stepper(params, config);

  Trajectory traj;
  traj.initial = initial;
  State state = initial;
  if (callbacks.on_sample) callbacks.on_sample(state, nullptr);

  const std::size_t stride = std::max<std::size_t>(1, callbacks.sample_stride);
  bool sampled_last = true;
  bool stopped = false;
  while (stepper.next_dt(state) > 0.0) {
    StepReport rep;
    try {
      rep = stepper.advance(state);
    } catch (const DegenerateDirectorError& e) {
      traj.final_state = state;
      throw RunFailure(e.what(), std::move(traj), true);
    } catch (const NumericalError& e) {
      traj.final_state = state;
      throw RunFailure(e.what(), std::move(traj), false);
    }
    ++traj.steps;
    traj.reports.push_back(rep);
    sampled_last = false;
    if (callbacks.on_sample && traj.steps % stride == 0) {
      callbacks.on_sample(state, &traj.reports.back());
      sampled_last = true;
    }
    if (callbacks.on_checkpoint && callbacks.checkpoint_stride > 0 &&
        traj.steps % callbacks.checkpoint_stride == 0) {
      callbacks.on_checkpoint(state, traj.steps);
    }
    if (callbacks.stop && callbacks.stop(state, rep)) {
      stopped = true;
      break;
    }
  }
  if (callbacks.on_sample && !sampled_last) callbacks.on_sample(state, &traj.reports.back());
  traj.final_state = std::move(state);
  traj.completed = !stopped;
  return traj;
}

}  // namespace nlc2
