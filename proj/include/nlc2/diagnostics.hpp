#pragma once

// Numerical residuals for the identities and bounds satisfied by solutions:
// energy balance, entropy inequality, maximum principles, weak-form
// identities, local energy concentration and the epsilon-regularity horizon.
// Space integrals are grid sums times the cell area, time integrals use the
// trapezoidal rule.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlc2/dynamics.hpp"
#include "nlc2/timestepper.hpp"

namespace nlc2 {

struct EnergyRecord {
  double t = 0.0;
  double kinetic = 0.0;    // int |u|^2 / 2
  double potential = 0.0;  // int |grad d|^2 / 2
  double heat = 0.0;       // int theta
  double total = 0.0;
  double dissipation_rate = 0.0;  // int S_N : grad u + |Lap d + chi_M d|^2
};

EnergyRecord energies(const State& state, const ApproximationParams& params);

struct DriftStats {
  double max_relative_drift = 0.0;  // max_t |total(t) - total(0)| / total(0)
  // max_t |KP(t) - KP(t0) + int_t0^t dissipation| with KP = kinetic + potential
  double balance_residual = 0.0;
  double balance_relative = 0.0;  // balance_residual / max(KP(t0), int dissipation)
  double integrated_dissipation = 0.0;
  bool flagged = false;  // max_relative_drift > tolerance
};

DriftStats conservation_drift(const std::vector<EnergyRecord>& series, double tolerance = 1e-5);

// ---- entropy inequality -------------------------------------------------

struct EntropyConfig {
  std::vector<double> alphas{0.25, 0.5, 0.75};
  double tolerance = 1e-4;
  void validate() const;
};

struct EntropyResidual {
  double alpha = 0.0;
  double t = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double negative_fraction = 0.0;  // share of nodes with R < -tolerance
  ScalarField field;
};

// Nodewise R = d_t theta^a + div(u theta^a) - Lap theta^a - a theta^(a-1) Q
// - a(1-a) theta^(a-2) |grad theta|^2 at mid.t, where Q is the heat source
// and the time derivative is a centered difference over the triple.
EntropyResidual entropy_residual(const State& prev, const State& mid, const State& next,
                                 double alpha, const ApproximationParams& params,
                                 double tolerance = 1e-4);

// ---- weak formulation ---------------------------------------------------

// phi(x, t) = g(t) phi_space(x) for the momentum identity, and
// g(t) scalar(x) for the temperature identity. Only g itself is needed: the
// d/dt term is integrated through exact increments of g.
struct WeakTestFunction {
  std::string name;
  std::function<std::array<double, 2>(double, double)> vector_part;
  std::function<double(double, double)> scalar_part;
  std::function<double(double)> g;
};

// Eight functions: stream functions {sin x sin y, cos x + cos y,
// sin 2x sin y, cos(x + 2y)} rotated into divergence-free fields, paired
// with temporal profiles cos^2(pi t / 2T) and sin^2(pi t / T). The scalar
// part is 1 + psi / 2.
std::vector<WeakTestFunction> default_test_bank(double t_end);

struct WeakFormResidual {
  std::string name;
  double momentum = 0.0;
  double momentum_scale = 0.0;  // space-time integral of the absolute integrands
  double temperature = 0.0;
  double temperature_scale = 0.0;
  double momentum_relative() const { return momentum_scale > 0 ? std::abs(momentum) / momentum_scale : 0.0; }
  double temperature_relative() const {
    return temperature_scale > 0 ? std::abs(temperature) / temperature_scale : 0.0;
  }
};

// Streams snapshots (increasing t) and accumulates both integral
// identities for every test function in the bank.
class WeakFormAccumulator {
 public:
  WeakFormAccumulator(const TorusGrid& grid, ApproximationParams params,
                      std::vector<WeakTestFunction> bank);
  void add(const State& state);
  std::vector<WeakFormResidual> residuals() const;
  std::size_t samples() const { return samples_; }

 private:
  struct Sampled {
    VectorField phi;
    TensorField grad_phi;
    ScalarField scalar;
    VectorField grad_scalar;
  };
  // flux parts carry g(t); the pairings int u.phi and int theta phi~ do not
  struct Integrands {
    std::vector<double> mom, mom_abs, temp, temp_abs;
    std::vector<double> mom_pair, mom_pair_abs, temp_pair, temp_pair_abs;
    std::vector<double> g;
  };
  Integrands evaluate(const State& s) const;

  TorusGrid grid_;
  ApproximationParams params_;
  std::vector<WeakTestFunction> bank_;
  std::vector<Sampled> sampled_;
  std::vector<WeakFormResidual> acc_;
  std::optional<Integrands> last_;
  double last_t_ = 0.0;
  std::vector<double> first_mom_, first_temp_;
  std::vector<double> last_mom_, last_temp_;
  std::size_t samples_ = 0;
};

std::vector<WeakFormResidual> weak_form_residual(const std::vector<State>& trajectory,
                                                 const ApproximationParams& params,
                                                 const std::vector<WeakTestFunction>& bank);

// ---- maximum principles -------------------------------------------------

struct MaximumPrincipleReport {
  double theta_margin = 0.0;     // min theta - theta_floor
  double director_margin = 0.0;  // max |d| - 1
  bool theta_ok = true;
  bool director_ok = true;
  bool passed() const { return theta_ok && director_ok; }
};

MaximumPrincipleReport maximum_principle_check(const State& state, double theta_floor,
                                               double tolerance = 1e-6);

// ---- energy concentration -----------------------------------------------

// |u|^2 + |grad d|^2 at every node.
ScalarField local_energy_density(const State& state);

struct ConcentrationReport {
  double t = 0.0;
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;  // sup_x int_{B_r(x)} (|u|^2 + |grad d|^2)
  bool flagged = false;
  double energy_drop = 0.0;  // filled in by the continuation driver
};

ConcentrationReport local_energy_sup(const State& state, double r, double eps0);

struct HorizonEstimate {
  double eps0 = 0.0;
  double e0 = 0.0;  // int |u|^2 + |grad d|^2
  double E0 = 0.0;  // int |u|^2 / 2 + |grad d|^2 / 2 + theta
  double R0 = 0.0;
  double tau0 = 0.0;
  double T0 = 0.0;
};

// tau0 = (eps0^4 / e0)^5, T0 = tau0 R0^3.
double horizon_tau0(double eps0, double e0);
double horizon_T0(double tau0, double R0);

// R0 is the largest r in (0, 1] with sup_x int_{B_2r(x)} e <= eps0^2,
// found by bisection down to a quarter grid cell.
HorizonEstimate horizon_estimate(const State& state, double eps0);

// sqrt(0.1 * energy) of a degree-one bubble of core radius 4h on the grid.
double calibrate_eps0(const TorusGrid& grid);

// ---- functional inequalities --------------------------------------------

enum class InequalityKind { ladyzhenskaya, korn };

struct InequalityReport {
  InequalityKind kind = InequalityKind::korn;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double radius = 0.0;    // Ladyzhenskaya
  double exponent = 2.0;  // Korn
  double calibration = 0.0;
  bool within_calibration = true;
};

// ||u||_{W^{1,2}}^2 against int |grad u + grad u^T|^2 + |u|^2.
InequalityReport korn_ratio(const VectorField& u);
// int_Q |u|^4 against sup_{t,x} int_{B_R(x)} |u|^2 * int_Q (|grad u|^2 + |u|^2/R^2).
// A single snapshot counts as a trajectory of unit duration.
InequalityReport ladyzhenskaya_ratio(const std::vector<State>& trajectory, double R);
InequalityReport inequality_ratio(const std::vector<State>& trajectory, InequalityKind kind,
                                  double R = 1.0);

// Twice the largest ratio over ten seeded random band-limited velocity
// fields on a 64^2 grid. Computed once per process.
double inequality_calibration(InequalityKind kind);

// ---- cutoff and heat bounds ----------------------------------------------

struct CutoffBoundReport {
  double integral = 0.0;     // int chi_M(|grad d|^2)^2
  double bound = 0.0;        // M^2 |Omega|
  double quoted_bound = 0.0;  // 4 pi M^2, the constant often quoted for this bound
  bool within_bound = true;
  bool within_quoted_bound = true;
};

CutoffBoundReport cutoff_energy_bound_check(const State& state, double M);

// Streams int_0^t int |grad theta|^q and Q(t) = int theta_0 + int_0^t dissipation.
// Both sides are reported; no constant is asserted.
class HeatBudget {
 public:
  HeatBudget(ApproximationParams params, double q = 1.25);
  void add(const State& state);
  double q() const { return q_; }
  double gradient_lq() const { return grad_q_; }
  double Q() const { return Q_; }
  double heat() const { return heat_; }  // int theta(t) at the last sample
  // int theta(t) - Q(t); zero for smooth solutions
  double heat_balance() const { return heat_ - Q_; }

 private:
  ApproximationParams params_;
  double q_;
  bool started_ = false;
  double t_ = 0.0, last_grad_ = 0.0, last_diss_ = 0.0;
  double grad_q_ = 0.0, Q_ = 0.0, heat_ = 0.0;
};

// ---- streaming recorder -------------------------------------------------

enum DiagnosticFlag : unsigned {
  kFlagConcentration = 1u,
  kFlagThetaFloor = 2u,
  kFlagDirectorNorm = 4u,
  kFlagEntropy = 8u,
};

struct DiagnosticsRow {
  EnergyRecord energy;
  double min_theta = 0.0;
  double max_d_norm_dev = 0.0;
  std::vector<double> entropy_min;  // per alpha; NaN without both neighbours
  std::vector<double> local_sup;    // per radius
  unsigned flags = 0;
};

struct RecorderConfig {
  EntropyConfig entropy;
  std::vector<double> radii;  // ball radii for local_energy_sup
  double eps0 = 0.0;          // <= 0 disables the concentration flag
  double r_monitor = 0.0;     // radius used for the flag; must be in radii
  double theta_floor = 0.0;
  double tolerance = 1e-6;
};

// Turns a sequence of snapshots into CSV rows. Entropy columns need the
// neighbouring snapshots, so each row is completed one observation late.
class DiagnosticsRecorder {
 public:
  DiagnosticsRecorder(ApproximationParams params, RecorderConfig config);
  void observe(const State& state);
  void finish();
  const std::vector<DiagnosticsRow>& rows() const { return rows_; }
  const RecorderConfig& config() const { return config_; }
  // Most negative entropy residual over all completed rows and alphas.
  double entropy_min() const { return entropy_min_; }
  // Largest |R| over all completed rows and alphas.
  double entropy_max_abs() const { return entropy_max_abs_; }

 private:
  DiagnosticsRow base_row(const State& s) const;
  void complete_pending(const State* next);

  ApproximationParams params_;
  RecorderConfig config_;
  std::vector<DiagnosticsRow> rows_;
  std::optional<State> before_, pending_;
  bool finished_ = false;
  double entropy_min_ = 0.0;
  double entropy_max_abs_ = 0.0;
};

}  // namespace nlc2
