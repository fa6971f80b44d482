#pragma once

// Right-hand sides of the regularized liquid-crystal system
//
//   u_t + (u.grad)u + grad p = div(S_N - grad d (.) grad d),   div u = 0
//   d_t + (u.grad)d          = Lap d + chi_M(|grad d|^2) d
//   theta_t + u.grad theta   = Lap theta + S_N : grad u + |Lap d + chi_M(|grad d|^2) d|^2
//
// with S_N = mu(theta)(grad u + grad u^T) + (1/N)|grad u|^{2/9} grad u.
//
// Index conventions: (grad u)_{ij} = d_j u_i, (div A)_i = d_j A_{ij},
// A : B = A_{ij} B_{ij}, (grad d (.) grad d)_{ij} = d_i d . d_j d.
// M = inf disables the cutoff, N = inf removes the power-law term.

#include <array>
#include <limits>

#include "nlc2/grid.hpp"

namespace nlc2 {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ViscosityFamily { constant, affine_clamped, rational_bounded };

// Temperature-dependent viscosity bounded by mu_lower <= mu(theta) <= mu_upper.
struct ViscosityModel {
  ViscosityFamily family = ViscosityFamily::constant;
  double mu_lower = 1.0;
  double mu_upper = 1.0;
  // affine_clamped: clamp(intercept + slope * theta, mu_lower, mu_upper)
  double intercept = 1.0;
  double slope = 0.0;
  // rational_bounded: mu_lower + (mu_upper - mu_lower) * theta / (theta + scale)
  double scale = 1.0;

  static ViscosityModel constant(double mu);
  static ViscosityModel affine_clamped(double intercept, double slope, double lower,
                                       double upper);
  static ViscosityModel rational_bounded(double lower, double upper, double scale);

  double operator()(double theta) const;
  void validate() const;
  bool operator==(const ViscosityModel&) const = default;
};

enum class DirectorMode {
  relaxed,     // integrate the regularized system as written; |d| <= 1 emerges
  constrained  // renormalize d after each step (emulates |d| = 1)
};

struct ApproximationParams {
  int n = 0;  // Galerkin truncation; 0 selects the 2/3-rule limit of the grid
  double M = kInfinity;
  double N = kInfinity;
  ViscosityModel viscosity;
  DirectorMode mode = DirectorMode::relaxed;

  void validate(const TorusGrid& grid) const;
  ModeMask mask(const TorusGrid& grid) const { return galerkin_mask(grid, n); }
  bool operator==(const ApproximationParams&) const = default;
};

struct State {
  VectorField u;
  DirectorField d;
  ScalarField theta;
  ScalarField p;
  double t = 0.0;

  State() = default;
  explicit State(const TorusGrid& grid);
  const TorusGrid& grid() const { return theta.grid(); }
};

struct StressTensors {
  TensorField strain;    // grad u + grad u^T
  TensorField s_n;       // mu(theta) strain + (1/N)|grad u|^{2/9} grad u
  TensorField sigma_nd;  // -grad d (.) grad d
};

// Spectral derivatives of a state, evaluated on the grid.
struct Derivatives {
  TensorField grad_u;     // component 2*i + j holds d_j u_i
  FieldTuple<6> grad_d;   // component 2*a + j holds d_j d_a
  DirectorField lap_d;
  VectorField grad_theta;
  ScalarField lap_theta;
};

Derivatives differentiate(const State& state);

// chi_M(s) = M chi(s / M) with chi(s) = min(s, 1); s < 0 is a domain error.
double chi_cutoff(double s, double M);

StressTensors assemble_stress(const State& state, const ApproximationParams& params);
StressTensors assemble_stress(const State& state, const Derivatives& der,
                              const ApproximationParams& params);

// |grad d|^2 at every node.
ScalarField grad_d_squared(const Derivatives& der);
// Lap d + chi_M(|grad d|^2) d at every node; in constrained mode its
// component along d is removed (it vanishes identically when |d| = 1).
DirectorField director_tension(const State& state, const Derivatives& der,
                               const ApproximationParams& params);

// Lap d + chi_M(|grad d|^2) d - (u.grad) d with the products dealiased.
DirectorField director_rhs(const State& state, const ApproximationParams& params);
// Leray projection of div S_N - (Lap d . grad) d - (u.grad) u, dealiased.
VectorField momentum_rhs(const State& state, const ApproximationParams& params);
// Same quantity with the elastic force taken as div(-grad d (.) grad d).
VectorField momentum_rhs_stress_form(const State& state, const ApproximationParams& params);
// S_N : grad u + |Lap d + chi_M(|grad d|^2) d|^2, nodewise.
ScalarField heat_source(const State& state, const ApproximationParams& params);
ScalarField heat_source(const State& state, const Derivatives& der,
                        const ApproximationParams& params);
// Lap theta - u.grad theta + heat source, products dealiased.
ScalarField temperature_rhs(const State& state, const ApproximationParams& params);
// Zero-mean p with Lap p = div div(S_N - grad d (.) grad d - u (x) u).
ScalarField pressure_solve(const State& state, const ApproximationParams& params);
// d / |d| nodewise; throws DegenerateDirectorError if min |d| <= 0.1.
DirectorField renormalize_director(const DirectorField& d);

// Fourier coefficients of the prognostic fields.
struct SpectralState {
  std::array<SpectralField, 2> u;
  std::array<SpectralField, 3> d;
  SpectralField theta;
};
SpectralState to_spectral(const State& state);

// Explicitly treated parts of the right-hand sides, dealiased and in
// Fourier space. The momentum part excludes mu_split * Lap u, which the
// time stepper handles implicitly, and is Leray-projected.
struct ExplicitTerms {
  std::array<SpectralField, 2> momentum;
  std::array<SpectralField, 3> director;
  SpectralField temperature;
};
ExplicitTerms explicit_terms(const State& state, const SpectralState& spec,
                             const ApproximationParams& params, double mu_split);

}  // namespace nlc2
