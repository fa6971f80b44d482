#include "nlc2/dynamics.hpp"

#include <cmath>
#include <string>

#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

constexpr double kPowerLawExponent = 2.0 / 9.0;

Derivatives differentiate(const SpectralState& spec) {
  const auto& g = spec.theta.grid();
  Derivatives der;
  der.grad_u = TensorField(g);
  der.grad_d = FieldTuple<6>(g);
  der.lap_d = DirectorField(g);
  der.grad_theta = VectorField(g);
  for (std::size_t i = 0; i < 2; ++i) {
    der.grad_u[tensor_index(i, 0)] = inverse_transform(spectral_derivative(spec.u[i], Axis::x));
    der.grad_u[tensor_index(i, 1)] = inverse_transform(spectral_derivative(spec.u[i], Axis::y));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    der.grad_d[2 * a] = inverse_transform(spectral_derivative(spec.d[a], Axis::x));
    der.grad_d[2 * a + 1] = inverse_transform(spectral_derivative(spec.d[a], Axis::y));
    der.lap_d[a] = inverse_transform(spectral_laplacian(spec.d[a]));
  }
  der.grad_theta[0] = inverse_transform(spectral_derivative(spec.theta, Axis::x));
  der.grad_theta[1] = inverse_transform(spectral_derivative(spec.theta, Axis::y));
  der.lap_theta = inverse_transform(spectral_laplacian(spec.theta));
  return der;
}

double power_law_coefficient(double grad_u_norm, double N) {
  if (std::isinf(N)) return 0.0;
  return std::pow(grad_u_norm, kPowerLawExponent) / N;
}

double frobenius(const TensorField& t, std::size_t k) {
  double s = 0.0;
  for (std::size_t c = 0; c < 4; ++c) s += t[c][k] * t[c][k];
  return std::sqrt(s);
}

// In constrained mode |d| = 1 and the tension is tangent to the sphere;
// discretely its normal part is what renormalization discards, so it must
// not feed the heat source.
void project_tangent(std::array<double, 3>& t, const DirectorField& d, std::size_t k) {
  const double n2 = d[0][k] * d[0][k] + d[1][k] * d[1][k] + d[2][k] * d[2][k];
  if (!(n2 > 0.0)) return;
  const double c = (t[0] * d[0][k] + t[1] * d[1][k] + t[2] * d[2][k]) / n2;
  for (std::size_t a = 0; a < 3; ++a) t[a] -= c * d[a][k];
}

SpectralField masked_transform(const ScalarField& f, const ModeMask& mask) {
  auto c = transform(f);
  truncate(c, mask);
  return c;
}

}  // namespace

ViscosityModel ViscosityModel::constant(double mu) {
  ViscosityModel m;
  m.family = ViscosityFamily::constant;
  m.mu_lower = m.mu_upper = m.intercept = mu;
  m.slope = 0.0;
  return m;
}

ViscosityModel ViscosityModel::affine_clamped(double intercept, double slope, double lower,
                                              double upper) {
  ViscosityModel m;
  m.family = ViscosityFamily::affine_clamped;
  m.intercept = intercept;
  m.slope = slope;
  m.mu_lower = lower;
  m.mu_upper = upper;
  return m;
}

ViscosityModel ViscosityModel::rational_bounded(double lower, double upper, double scale) {
  ViscosityModel m;
  m.family = ViscosityFamily::rational_bounded;
  m.mu_lower = lower;
  m.mu_upper = upper;
  m.scale = scale;
  return m;
}

double ViscosityModel::operator()(double theta) const {
  switch (family) {
    case ViscosityFamily::constant:
      return mu_lower;
    case ViscosityFamily::affine_clamped:
      return std::clamp(intercept + slope * theta, mu_lower, mu_upper);
    case ViscosityFamily::rational_bounded: {
      const double th = std::max(theta, 0.0);
      return mu_lower + (mu_upper - mu_lower) * th / (th + scale);
    }
  }
  return mu_lower;
}

void ViscosityModel::validate() const {
  if (!(mu_lower > 0.0)) throw ConfigError("mu_lower must be positive");
  if (!(mu_lower <= mu_upper)) throw ConfigError("mu_lower must not exceed mu_upper");
  if (family == ViscosityFamily::constant && mu_lower != mu_upper) {
    throw ConfigError("constant viscosity requires mu_lower == mu_upper");
  }
  if (family == ViscosityFamily::rational_bounded && !(scale > 0.0)) {
    throw ConfigError("rational viscosity scale must be positive");
  }
  if (!std::isfinite(mu_upper) || !std::isfinite(intercept) || !std::isfinite(slope)) {
    throw ConfigError("viscosity coefficients must be finite");
  }
}

void ApproximationParams::validate(const TorusGrid& grid) const {
  if (!(M > 0.0)) throw ConfigError("cutoff M must be positive (inf disables it)");
  if (!(N > 0.0)) throw ConfigError("regularization N must be positive (inf disables it)");
  if (n < 0) throw ConfigError("Galerkin truncation n must be >= 0");
  const int reserve = std::min(grid.nx(), grid.ny()) / 2 - 1;
  if (n > reserve) {
    throw ConfigError("Galerkin truncation n=" + std::to_string(n) +
                      " exceeds the grid's dealiasing reserve " + std::to_string(reserve));
  }
  viscosity.validate();
}

State::State(const TorusGrid& grid)
    : u(grid), d(grid), theta(grid), p(grid), t(0.0) {}

SpectralState to_spectral(const State& state) {
  SpectralState s;
  for (std::size_t i = 0; i < 2; ++i) s.u[i] = transform(state.u[i]);
  for (std::size_t a = 0; a < 3; ++a) s.d[a] = transform(state.d[a]);
  s.theta = transform(state.theta);
  return s;
}

Derivatives differentiate(const State& state) { return differentiate(to_spectral(state)); }

double chi_cutoff(double s, double M) {
  if (!(s >= 0.0)) throw DomainError("chi_M is defined for s >= 0, got " + std::to_string(s));
  return s < M ? s : M;
}

StressTensors assemble_stress(const State& state, const Derivatives& der,
                              const ApproximationParams& params) {
  const auto& g = state.grid();
  StressTensors out{TensorField(g), TensorField(g), TensorField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double mu = params.viscosity(state.theta[k]);
    const double pl = power_law_coefficient(frobenius(der.grad_u, k), params.N);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double e = der.grad_u[tensor_index(i, j)][k] + der.grad_u[tensor_index(j, i)][k];
        out.strain[tensor_index(i, j)][k] = e;
        out.s_n[tensor_index(i, j)][k] = mu * e + pl * der.grad_u[tensor_index(i, j)][k];
        double dd = 0.0;
        for (std::size_t a = 0; a < 3; ++a) dd += der.grad_d[2 * a + i][k] * der.grad_d[2 * a + j][k];
        out.sigma_nd[tensor_index(i, j)][k] = -dd;
      }
    }
  }
  return out;
}

StressTensors assemble_stress(const State& state, const ApproximationParams& params) {
  return assemble_stress(state, differentiate(state), params);
}

ScalarField grad_d_squared(const Derivatives& der) {
  ScalarField out(der.grad_d.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) s += der.grad_d[c][k] * der.grad_d[c][k];
    out[k] = s;
  }
  return out;
}

DirectorField director_tension(const State& state, const Derivatives& der,
                               const ApproximationParams& params) {
  const auto g2 = grad_d_squared(der);
  DirectorField out(state.grid());
  const bool tangent = params.mode == DirectorMode::constrained;
  for (std::size_t k = 0; k < g2.size(); ++k) {
    const double chi = chi_cutoff(g2[k], params.M);
    std::array<double, 3> t{};
    for (std::size_t a = 0; a < 3; ++a) t[a] = der.lap_d[a][k] + chi * state.d[a][k];
    if (tangent) project_tangent(t, state.d, k);
    for (std::size_t a = 0; a < 3; ++a) out[a][k] = t[a];
  }
  return out;
}

ScalarField heat_source(const State& state, const Derivatives& der,
                        const ApproximationParams& params) {
  const auto stress = assemble_stress(state, der, params);
  const auto tension = director_tension(state, der, params);
  ScalarField out(state.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double power = 0.0;
    for (std::size_t c = 0; c < 4; ++c) power += stress.s_n[c][k] * der.grad_u[c][k];
    double t2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) t2 += tension[a][k] * tension[a][k];
    out[k] = power + t2;
  }
  return out;
}

ScalarField heat_source(const State& state, const ApproximationParams& params) {
  return heat_source(state, differentiate(state), params);
}

ExplicitTerms explicit_terms(const State& state, const SpectralState& spec,
                             const ApproximationParams& params, double mu_split) {
  const auto& g = state.grid();
  const auto mask = params.mask(g);
  const auto der = differentiate(spec);
  const bool tangent = params.mode == DirectorMode::constrained;

  TensorField tau(g);
  VectorField momentum_nodal(g);
  DirectorField director_nodal(g);
  ScalarField temperature_nodal(g);

  for (std::size_t k = 0; k < g.size(); ++k) {
    const double mu = params.viscosity(state.theta[k]);
    const double pl = power_law_coefficient(frobenius(der.grad_u, k), params.N);
    double power = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double gij = der.grad_u[tensor_index(i, j)][k];
        const double e = gij + der.grad_u[tensor_index(j, i)][k];
        tau[tensor_index(i, j)][k] = (mu - mu_split) * e + pl * gij;
        power += (mu * e + pl * gij) * gij;
      }
    }
    const double u0 = state.u[0][k];
    const double u1 = state.u[1][k];
    for (std::size_t i = 0; i < 2; ++i) {
      double elastic = 0.0;
      for (std::size_t a = 0; a < 3; ++a) elastic -= der.lap_d[a][k] * der.grad_d[2 * a + i][k];
      const double advection =
          u0 * der.grad_u[tensor_index(i, 0)][k] + u1 * der.grad_u[tensor_index(i, 1)][k];
      momentum_nodal[i][k] = elastic - advection;
    }
    double g2 = 0.0;
    for (std::size_t c = 0; c < 6; ++c) g2 += der.grad_d[c][k] * der.grad_d[c][k];
    const double chi = chi_cutoff(g2, params.M);
    std::array<double, 3> t{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double da = state.d[a][k];
      t[a] = der.lap_d[a][k] + chi * da;
      director_nodal[a][k] =
          chi * da - (u0 * der.grad_d[2 * a][k] + u1 * der.grad_d[2 * a + 1][k]);
    }
    if (tangent) project_tangent(t, state.d, k);
    const double tension2 = t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
    const double theta_advection = u0 * der.grad_theta[0][k] + u1 * der.grad_theta[1][k];
    temperature_nodal[k] = power + tension2 - theta_advection;
  }

  ExplicitTerms out;
  for (std::size_t i = 0; i < 2; ++i) {
    auto c = spectral_derivative(transform(tau[tensor_index(i, 0)]), Axis::x);
    c += spectral_derivative(transform(tau[tensor_index(i, 1)]), Axis::y);
    c += transform(momentum_nodal[i]);
    truncate(c, mask);
    out.momentum[i] = std::move(c);
  }
  leray_project(out.momentum[0], out.momentum[1]);
  for (std::size_t a = 0; a < 3; ++a) out.director[a] = masked_transform(director_nodal[a], mask);
  out.temperature = masked_transform(temperature_nodal, mask);
  return out;
}

VectorField momentum_rhs(const State& state, const ApproximationParams& params) {
  const auto terms = explicit_terms(state, to_spectral(state), params, 0.0);
  VectorField out(state.grid());
  for (std::size_t i = 0; i < 2; ++i) out[i] = inverse_transform(terms.momentum[i]);
  return out;
}

VectorField momentum_rhs_stress_form(const State& state, const ApproximationParams& params) {
  const auto& g = state.grid();
  const auto mask = params.mask(g);
  const auto der = differentiate(state);
  const auto stress = assemble_stress(state, der, params);
  std::array<SpectralField, 2> c;
  for (std::size_t i = 0; i < 2; ++i) {
    ScalarField advection(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      advection[k] = state.u[0][k] * der.grad_u[tensor_index(i, 0)][k] +
                     state.u[1][k] * der.grad_u[tensor_index(i, 1)][k];
    }
    const auto a0 = stress.s_n[tensor_index(i, 0)] + stress.sigma_nd[tensor_index(i, 0)];
    const auto a1 = stress.s_n[tensor_index(i, 1)] + stress.sigma_nd[tensor_index(i, 1)];
    c[i] = spectral_derivative(transform(a0), Axis::x);
    c[i] += spectral_derivative(transform(a1), Axis::y);
    auto adv = transform(advection);
    adv *= -1.0;
    c[i] += adv;
    truncate(c[i], mask);
  }
  leray_project(c[0], c[1]);
  VectorField out(g);
  for (std::size_t i = 0; i < 2; ++i) out[i] = inverse_transform(c[i]);
  return out;
}

DirectorField director_rhs(const State& state, const ApproximationParams& params) {
  const auto spec = to_spectral(state);
  const auto terms = explicit_terms(state, spec, params, 0.0);
  DirectorField out(state.grid());
  for (std::size_t a = 0; a < 3; ++a) {
    auto c = spectral_laplacian(spec.d[a]);
    c += terms.director[a];
    out[a] = inverse_transform(c);
  }
  return out;
}

ScalarField temperature_rhs(const State& state, const ApproximationParams& params) {
  const auto spec = to_spectral(state);
  const auto terms = explicit_terms(state, spec, params, 0.0);
  auto c = spectral_laplacian(spec.theta);
  c += terms.temperature;
  return inverse_transform(c);
}

ScalarField pressure_solve(const State& state, const ApproximationParams& params) {
  const auto& g = state.grid();
  const auto der = differentiate(state);
  const auto stress = assemble_stress(state, der, params);
  SpectralField rhs(g);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      ScalarField a = stress.s_n[tensor_index(i, j)] + stress.sigma_nd[tensor_index(i, j)];
      for (std::size_t k = 0; k < g.size(); ++k) a[k] -= state.u[i][k] * state.u[j][k];
      rhs += spectral_derivative(spectral_derivative(transform(a), static_cast<Axis>(j)),
                                 static_cast<Axis>(i));
    }
  }
  truncate(rhs, params.mask(g));
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.spectral_nx(); ++i) {
      const double k1 = g.kx(i);
      const double k2 = g.ky(j);
      const double ksq = k1 * k1 + k2 * k2;
      rhs.at(i, j) = ksq == 0.0 ? std::complex<double>(0.0) : -rhs.at(i, j) / ksq;
    }
  }
  return inverse_transform(rhs);
}

DirectorField renormalize_director(const DirectorField& d) {
  DirectorField out(d.grid());
  double min_norm = kInfinity;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double n = std::sqrt(d[0][k] * d[0][k] + d[1][k] * d[1][k] + d[2][k] * d[2][k]);
    min_norm = std::min(min_norm, n);
    if (!(n > 0.1)) continue;
    for (std::size_t a = 0; a < 3; ++a) out[a][k] = d[a][k] / n;
  }
  if (!(min_norm > 0.1)) {
    throw DegenerateDirectorError("director norm fell to " + std::to_string(min_norm) +
                                  " (<= 0.1); renormalization is meaningless");
  }
  return out;
}

}  // namespace nlc2
