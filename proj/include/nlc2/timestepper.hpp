#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nlc2/dynamics.hpp"
#include "nlc2/errors.hpp"

namespace nlc2 {

// imex1: implicit Euler diffusion + explicit Euler for the rest.
// imex2: Crank-Nicolson diffusion + second-order Adams-Bashforth (variable step).
enum class Scheme { imex1, imex2 };

struct SchemeConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::imex2;
  double mu_split = 0.0;  // implicit viscosity; <= 0 selects viscosity.mu_upper
  double cfl_safety = 0.5;
  bool adapt = false;

  double implicit_viscosity(const ViscosityModel& visc) const {
    return mu_split > 0.0 ? mu_split : visc.mu_upper;
  }
  void validate(const ApproximationParams& params) const;
  bool operator==(const SchemeConfig&) const = default;
};

struct StepReport {
  double dt = 0.0;
  double max_u = 0.0;
  double max_grad_d_sq = 0.0;
  double min_theta = 0.0;
  double max_d_norm_dev = 0.0;
  double wall_seconds = 0.0;
};

// Mode-wise update of y' = -c |k|^2 y + f for one step of length dt:
//   (1 + w dt c k2) y_new = (1 - (1 - w) dt c k2) y + dt f
// with w = 1 (implicit Euler) or w = 1/2 (Crank-Nicolson).
inline std::complex<double> diffusion_update(std::complex<double> y, std::complex<double> f,
                                             double c_k2, double dt, double w) {
  return ((1.0 - (1.0 - w) * dt * c_k2) * y + dt * f) / (1.0 + w * dt * c_k2);
}

// Advances a State. The stepper remembers the explicit terms of the last
// step it produced; a call continuing from that state uses the two-step
// formula, any other state restarts with one first-order step.
class Stepper {
 public:
  Stepper(ApproximationParams params, SchemeConfig config);

  const ApproximationParams& params() const { return params_; }
  const SchemeConfig& config() const { return config_; }

  // Step length the next call would use from `state`.
  double next_dt(const State& state) const;
  // Advances `state` in place. On failure the state is left untouched.
  StepReport advance(State& state);
  std::pair<State, StepReport> step(const State& state);
  void reset() { history_.reset(); }

 private:
  struct History {
    ExplicitTerms terms;
    double dt;
    double t;  // time of the state the terms will be paired with
  };

  ApproximationParams params_;
  SchemeConfig config_;
  std::optional<History> history_;
};

// Snapshot statistics shared by reports and diagnostics.
StepReport summarize(const State& state, double dt);

struct RunCallbacks {
  std::size_t sample_stride = 1;
  // Called with the initial state (report == nullptr), every
  // `sample_stride` steps, and after the final step.
  std::function<void(const State&, const StepReport*)> on_sample;
  std::size_t checkpoint_stride = 0;  // 0 disables
  std::function<void(const State&, std::size_t step)> on_checkpoint;
  // Optional early stop, checked after each step.
  std::function<bool(const State&, const StepReport&)> stop;
};

struct Trajectory {
  State initial;
  State final_state;
  std::size_t steps = 0;
  std::vector<StepReport> reports;
  bool completed = false;
};

// Raised by run(); carries everything computed before the failing step.
class RunFailure : public NumericalError {
 public:
  RunFailure(const std::string& what, Trajectory partial, bool degenerate)
      : NumericalError(what), partial_(std::move(partial)), degenerate_(degenerate) {}
  const Trajectory& partial() const { return partial_; }
  bool degenerate_director() const { return degenerate_; }

 private:
  Trajectory partial_;
  bool degenerate_;
};

Trajectory run(const State& initial, const ApproximationParams& params,
               const SchemeConfig& config, const RunCallbacks& callbacks = {});

}  // namespace nlc2
