#include "nlc2/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sum_sq(const VectorField& v, std::size_t k) { return v[0][k] * v[0][k] + v[1][k] * v[1][k]; }

// Shared pieces of the entropy residual that do not depend on alpha.
struct EntropyInputs {
  ScalarField heat;
  ScalarField grad_theta_sq;
};

EntropyInputs entropy_inputs(const State& mid, const ApproximationParams& params) {
  const auto der = differentiate(mid);
  EntropyInputs in{heat_source(mid, der, params), ScalarField(mid.grid())};
  for (std::size_t k = 0; k < mid.grid().size(); ++k) in.grad_theta_sq[k] = sum_sq(der.grad_theta, k);
  return in;
}

void require_positive(const State& s) {
  const double m = min_value(s.theta);
  if (!(m > 0.0)) {
    throw PositivityError("entropy residual needs theta > 0; min theta = " + std::to_string(m) +
                          " at t=" + std::to_string(s.t));
  }
}

ScalarField power(const ScalarField& f, double a) {
  ScalarField out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::pow(f[k], a);
  return out;
}

EntropyResidual entropy_residual_impl(const State& prev, const State& mid, const State& next,
                                      double alpha, const EntropyInputs& in, double tolerance) {
  const double h1 = mid.t - prev.t;
  const double h2 = next.t - mid.t;
  if (!(h1 > 0.0 && h2 > 0.0)) throw UsageError("entropy residual needs increasing snapshot times");
  const double w_prev = -h2 / (h1 * (h1 + h2));
  const double w_mid = (h2 - h1) / (h1 * h2);
  const double w_next = h1 / (h2 * (h1 + h2));

  const auto& g = mid.grid();
  const auto ta_prev = power(prev.theta, alpha);
  const auto ta_mid = power(mid.theta, alpha);
  const auto ta_next = power(next.theta, alpha);
  const auto spec = transform(ta_mid);
  const auto dx = inverse_transform(spectral_derivative(spec, Axis::x));
  const auto dy = inverse_transform(spectral_derivative(spec, Axis::y));
  const auto lap = inverse_transform(spectral_laplacian(spec));

  EntropyResidual r;
  r.alpha = alpha;
  r.t = mid.t;
  r.field = ScalarField(g);
  double sum = 0.0;
  std::size_t negative = 0;
  r.min = kInfinity;
  r.max = -kInfinity;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double th = mid.theta[k];
    const double dt = w_prev * ta_prev[k] + w_mid * ta_mid[k] + w_next * ta_next[k];
    const double adv = mid.u[0][k] * dx[k] + mid.u[1][k] * dy[k];
    const double src = alpha * std::pow(th, alpha - 1.0) * in.heat[k] +
                       alpha * (1.0 - alpha) * std::pow(th, alpha - 2.0) * in.grad_theta_sq[k];
    const double v = dt + adv - lap[k] - src;
    r.field[k] = v;
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
    sum += v;
    if (v < -tolerance) ++negative;
  }
  r.mean = sum / static_cast<double>(g.size());
  r.negative_fraction = static_cast<double>(negative) / static_cast<double>(g.size());
  return r;
}

struct StreamDerivatives {
  std::function<std::array<double, 2>(double, double)> phi;
  std::function<double(double, double)> psi;
};

InequalityReport korn_raw(const VectorField& u) {
  const auto& g = u.grid();
  const auto g0 = gradient(u[0]);
  const auto g1 = gradient(u[1]);
  double u2 = 0.0, grad2 = 0.0, sym2 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = g0[0][k], b = g0[1][k], c = g1[0][k], d = g1[1][k];
    u2 += u[0][k] * u[0][k] + u[1][k] * u[1][k];
    grad2 += a * a + b * b + c * c + d * d;
    sym2 += 4.0 * a * a + 2.0 * (b + c) * (b + c) + 4.0 * d * d;
  }
  InequalityReport r;
  r.kind = InequalityKind::korn;
  r.exponent = 2.0;
  r.lhs = (u2 + grad2) * g.cell_area();
  r.rhs = (sym2 + u2) * g.cell_area();
  r.ratio = r.lhs == 0.0 ? 0.0 : (r.rhs == 0.0 ? kInfinity : r.lhs / r.rhs);
  return r;
}

std::vector<double> trapezoid_weights(const std::vector<State>& traj) {
  std::vector<double> w(traj.size(), 0.0);
  if (traj.size() == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double dt = traj[i + 1].t - traj[i].t;
    if (!(dt > 0.0)) throw UsageError("trajectory times must increase");
    w[i] += 0.5 * dt;
    w[i + 1] += 0.5 * dt;
  }
  return w;
}

InequalityReport ladyzhenskaya_raw(const std::vector<State>& traj, double R) {
  if (traj.empty()) throw UsageError("Ladyzhenskaya ratio needs at least one snapshot");
  if (!(R > 0.0)) throw ConfigError("Ladyzhenskaya radius must be positive");
  const auto w = trapezoid_weights(traj);
  double lhs = 0.0, grad = 0.0, sup_ball = 0.0;
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const auto& u = traj[s].u;
    const auto& g = u.grid();
    ScalarField u2(g);
    double quartic = 0.0, energy = 0.0;
    const auto g0 = gradient(u[0]);
    const auto g1 = gradient(u[1]);
    for (std::size_t k = 0; k < g.size(); ++k) {
      u2[k] = u[0][k] * u[0][k] + u[1][k] * u[1][k];
      quartic += u2[k] * u2[k];
      energy += sum_sq(g0, k) + sum_sq(g1, k) + u2[k] / (R * R);
    }
    lhs += w[s] * quartic * g.cell_area();
    grad += w[s] * energy * g.cell_area();
    sup_ball = std::max(sup_ball, max_value(ball_integrals(u2, R)));
  }
  InequalityReport r;
  r.kind = InequalityKind::ladyzhenskaya;
  r.radius = R;
  r.lhs = lhs;
  r.rhs = std::max(sup_ball, 0.0) * grad;
  r.ratio = r.lhs == 0.0 ? 0.0 : (r.rhs == 0.0 ? kInfinity : r.lhs / r.rhs);
  return r;
}

VectorField perp_gradient(const ScalarField& psi) {
  const auto gp = gradient(psi);
  VectorField u(psi.grid());
  u[0] = -1.0 * gp[1];
  u[1] = gp[0];
  return u;
}

}  // namespace

// ---- energies -------------------------------------------------------------

EnergyRecord energies(const State& state, const ApproximationParams& params) {
  const auto& g = state.grid();
  const auto der = differentiate(state);
  EnergyRecord e;
  e.t = state.t;
  double ke = 0.0, pe = 0.0, heat = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    ke += state.u[0][k] * state.u[0][k] + state.u[1][k] * state.u[1][k];
    for (std::size_t c = 0; c < 6; ++c) pe += der.grad_d[c][k] * der.grad_d[c][k];
    heat += state.theta[k];
  }
  e.kinetic = 0.5 * ke * g.cell_area();
  e.potential = 0.5 * pe * g.cell_area();
  e.heat = heat * g.cell_area();
  e.total = e.kinetic + e.potential + e.heat;
  e.dissipation_rate = integral(heat_source(state, der, params));
  return e;
}

DriftStats conservation_drift(const std::vector<EnergyRecord>& series, double tolerance) {
  if (series.empty()) throw UsageError("conservation_drift needs at least one record");
  DriftStats s;
  const auto& first = series.front();
  const double scale = std::abs(first.total) > 0.0 ? std::abs(first.total) : 1.0;
  const double kp0 = first.kinetic + first.potential;
  double diss = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series[i];
    s.max_relative_drift = std::max(s.max_relative_drift, std::abs(r.total - first.total) / scale);
    if (i > 0) {
      const auto& p = series[i - 1];
      diss += 0.5 * (r.t - p.t) * (r.dissipation_rate + p.dissipation_rate);
    }
    s.balance_residual = std::max(s.balance_residual, std::abs(r.kinetic + r.potential - kp0 + diss));
  }
  s.integrated_dissipation = diss;
  const double bscale = std::max(std::abs(kp0), std::abs(diss));
  s.balance_relative = bscale > 0.0 ? s.balance_residual / bscale : 0.0;
  s.flagged = s.max_relative_drift > tolerance;
  return s;
}

// ---- entropy ----------------------------------------------------------------

void EntropyConfig::validate() const {
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("entropy exponents must lie in (0, 1)");
  }
  if (!(tolerance >= 0.0)) throw ConfigError("entropy tolerance must be >= 0");
}

EntropyResidual entropy_residual(const State& prev, const State& mid, const State& next,
                                 double alpha, const ApproximationParams& params,
                                 double tolerance) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("entropy exponent must lie in (0, 1)");
  require_positive(prev);
  require_positive(mid);
  require_positive(next);
  return entropy_residual_impl(prev, mid, next, alpha, entropy_inputs(mid, params), tolerance);
}

// ---- weak formulation -------------------------------------------------------

std::vector<WeakTestFunction> default_test_bank(double t_end) {
  if (!(t_end > 0.0)) throw ConfigError("test bank needs t_end > 0");
  using V = std::array<double, 2>;
  // phi = (-d_y psi, d_x psi)
  const std::vector<std::pair<std::string, StreamDerivatives>> streams = {
      {"sinx_siny",
       {[](double x, double y) { return V{-std::sin(x) * std::cos(y), std::cos(x) * std::sin(y)}; },
        [](double x, double y) { return std::sin(x) * std::sin(y); }}},
      {"cosx_plus_cosy",
       {[](double x, double y) { return V{std::sin(y), -std::sin(x)}; },
        [](double x, double y) { return std::cos(x) + std::cos(y); }}},
      {"sin2x_siny",
       {[](double x, double y) {
          return V{-std::sin(2 * x) * std::cos(y), 2 * std::cos(2 * x) * std::sin(y)};
        },
        [](double x, double y) { return std::sin(2 * x) * std::sin(y); }}},
      {"cos_x_plus_2y",
       {[](double x, double y) { return V{2 * std::sin(x + 2 * y), -std::sin(x + 2 * y)}; },
        [](double x, double y) { return std::cos(x + 2 * y); }}},
  };
  const double T = t_end;
  std::vector<WeakTestFunction> bank;
  for (const auto& [name, s] : streams) {
    auto psi = s.psi;
    WeakTestFunction a{name + "_decay", s.phi,
                       [psi](double x, double y) { return 1.0 + 0.5 * psi(x, y); },
                       [T](double t) { return std::pow(std::cos(kPi * t / (2 * T)), 2); }};
    WeakTestFunction b{name + "_bump", s.phi,
                       [psi](double x, double y) { return 1.0 + 0.5 * psi(x, y); },
                       [T](double t) { return std::pow(std::sin(kPi * t / T), 2); }};
    bank.push_back(std::move(a));
    bank.push_back(std::move(b));
  }
  return bank;
}

WeakFormAccumulator::WeakFormAccumulator(const TorusGrid& grid, ApproximationParams params,
                                         std::vector<WeakTestFunction> bank)
    : grid_(grid), params_(std::move(params)), bank_(std::move(bank)) {
  if (bank_.empty()) throw ConfigError("test function bank is empty");
  for (const auto& b : bank_) {
    if (!b.vector_part || !b.scalar_part || !b.g) {
      throw ConfigError("test function '" + b.name + "' is incomplete");
    }
    Sampled s{VectorField(grid), TensorField(grid), ScalarField(grid), VectorField(grid)};
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const auto v = b.vector_part(grid.x(i), grid.y(j));
        s.phi[0](i, j) = v[0];
        s.phi[1](i, j) = v[1];
        s.scalar(i, j) = b.scalar_part(grid.x(i), grid.y(j));
      }
    }
    const double div = max_abs(divergence(s.phi));
    if (div > 1e-8 * std::max(1.0, max_abs(s.phi))) {
      throw ConfigError("test function '" + b.name + "' is not divergence-free (max |div| = " +
                        std::to_string(div) + ")");
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const auto gi = gradient(s.phi[i]);
      s.grad_phi[tensor_index(i, 0)] = gi[0];
      s.grad_phi[tensor_index(i, 1)] = gi[1];
    }
    s.grad_scalar = gradient(s.scalar);
    sampled_.push_back(std::move(s));
    acc_.push_back(WeakFormResidual{b.name});
  }
}

WeakFormAccumulator::Integrands WeakFormAccumulator::evaluate(const State& s) const {
  const auto der = differentiate(s);
  const auto stress = assemble_stress(s, der, params_);
  const auto q = heat_source(s, der, params_);
  const double t = s.t;
  const double area = grid_.cell_area();
  const std::size_t nb = bank_.size();
  Integrands out;
  for (auto* v : {&out.mom, &out.mom_abs, &out.temp, &out.temp_abs, &out.mom_pair,
                  &out.mom_pair_abs, &out.temp_pair, &out.temp_pair_abs, &out.g})
    v->assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& f = sampled_[b];
    double up = 0.0, up_abs = 0.0, conv = 0.0, conv_abs = 0.0, str = 0.0, str_abs = 0.0;
    double tp = 0.0, tp_abs = 0.0, tadv = 0.0, tadv_abs = 0.0, tdiff = 0.0, tdiff_abs = 0.0,
           tsrc = 0.0, tsrc_abs = 0.0;
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const double v = s.u[0][k] * f.phi[0][k] + s.u[1][k] * f.phi[1][k];
      up += v;
      up_abs += std::abs(v);
      double cv = 0.0, sv = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          const double gp = f.grad_phi[tensor_index(i, j)][k];
          cv += s.u[i][k] * s.u[j][k] * gp;
          sv += (stress.s_n[tensor_index(i, j)][k] + stress.sigma_nd[tensor_index(i, j)][k]) * gp;
        }
      }
      conv += cv;
      conv_abs += std::abs(cv);
      str += sv;
      str_abs += std::abs(sv);

      const double th = s.theta[k];
      const double p = th * f.scalar[k];
      tp += p;
      tp_abs += std::abs(p);
      const double ta = th * (s.u[0][k] * f.grad_scalar[0][k] + s.u[1][k] * f.grad_scalar[1][k]);
      tadv += ta;
      tadv_abs += std::abs(ta);
      const double td = der.grad_theta[0][k] * f.grad_scalar[0][k] +
                        der.grad_theta[1][k] * f.grad_scalar[1][k];
      tdiff += td;
      tdiff_abs += std::abs(td);
      const double ts = q[k] * f.scalar[k];
      tsrc += ts;
      tsrc_abs += std::abs(ts);
    }
    const double g = bank_[b].g(t);
    out.g[b] = g;
    out.mom[b] = area * g * (conv - str);
    out.mom_abs[b] = area * std::abs(g) * (conv_abs + str_abs);
    out.temp[b] = area * g * (tadv - tdiff + tsrc);
    out.temp_abs[b] = area * std::abs(g) * (tadv_abs + tdiff_abs + tsrc_abs);
    out.mom_pair[b] = area * up;
    out.mom_pair_abs[b] = area * up_abs;
    out.temp_pair[b] = area * tp;
    out.temp_pair_abs[b] = area * tp_abs;
  }
  return out;
}

void WeakFormAccumulator::add(const State& state) {
  if (!(state.grid() == grid_)) throw UsageError("snapshot grid does not match the accumulator");
  if (last_ && !(state.t > last_t_)) throw UsageError("snapshots must arrive in increasing time");
  auto cur = evaluate(state);
  const std::size_t nb = bank_.size();
  std::vector<double> mom_end(nb), temp_end(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    mom_end[b] = cur.g[b] * cur.mom_pair[b];
    temp_end[b] = cur.g[b] * cur.temp_pair[b];
  }
  if (!last_) {
    first_mom_ = mom_end;
    first_temp_ = temp_end;
  } else {
    // int g' X dt over the interval as (g1 - g0) times the mean of X, which is
    // exact when X is constant (rest states) and second order otherwise
    const double dt = state.t - last_t_;
    for (std::size_t b = 0; b < nb; ++b) {
      const double dg = cur.g[b] - last_->g[b];
      acc_[b].momentum -= dg * 0.5 * (last_->mom_pair[b] + cur.mom_pair[b]) +
                          0.5 * dt * (last_->mom[b] + cur.mom[b]);
      acc_[b].momentum_scale += std::abs(dg) * 0.5 * (last_->mom_pair_abs[b] + cur.mom_pair_abs[b]) +
                                0.5 * dt * (last_->mom_abs[b] + cur.mom_abs[b]);
      acc_[b].temperature -= dg * 0.5 * (last_->temp_pair[b] + cur.temp_pair[b]) +
                             0.5 * dt * (last_->temp[b] + cur.temp[b]);
      acc_[b].temperature_scale +=
          std::abs(dg) * 0.5 * (last_->temp_pair_abs[b] + cur.temp_pair_abs[b]) +
          0.5 * dt * (last_->temp_abs[b] + cur.temp_abs[b]);
    }
  }
  last_mom_ = std::move(mom_end);
  last_temp_ = std::move(temp_end);
  last_ = std::move(cur);
  last_t_ = state.t;
  ++samples_;
}

std::vector<WeakFormResidual> WeakFormAccumulator::residuals() const {
  if (samples_ == 0) throw UsageError("weak-form residual needs at least one snapshot");
  auto out = acc_;
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].momentum += last_mom_[b] - first_mom_[b];
    out[b].momentum_scale += std::abs(last_mom_[b]) + std::abs(first_mom_[b]);
    out[b].temperature += last_temp_[b] - first_temp_[b];
    out[b].temperature_scale += std::abs(last_temp_[b]) + std::abs(first_temp_[b]);
  }
  return out;
}

std::vector<WeakFormResidual> weak_form_residual(const std::vector<State>& trajectory,
                                                 const ApproximationParams& params,
                                                 const std::vector<WeakTestFunction>& bank) {
  if (trajectory.empty()) throw UsageError("weak-form residual needs a trajectory");
  WeakFormAccumulator acc(trajectory.front().grid(), params, bank);
  for (const auto& s : trajectory) acc.add(s);
  return acc.residuals();
}

// ---- maximum principles ---------------------------------------------------

MaximumPrincipleReport maximum_principle_check(const State& state, double theta_floor,
                                               double tolerance) {
  MaximumPrincipleReport r;
  r.theta_margin = min_value(state.theta) - theta_floor;
  r.director_margin = max_value(pointwise_norm(state.d)) - 1.0;
  r.theta_ok = r.theta_margin >= -tolerance * std::max(1.0, std::abs(theta_floor));
  r.director_ok = r.director_margin <= tolerance;
  return r;
}

// ---- concentration ----------------------------------------------------------

ScalarField local_energy_density(const State& state) {
  const auto& g = state.grid();
  ScalarField e(g);
  for (std::size_t k = 0; k < g.size(); ++k) e[k] = sum_sq(state.u, k);
  for (std::size_t a = 0; a < 3; ++a) {
    const auto ga = gradient(state.d[a]);
    for (std::size_t k = 0; k < g.size(); ++k) e[k] += sum_sq(ga, k);
  }
  return e;
}

ConcentrationReport local_energy_sup(const State& state, double r, double eps0) {
  const auto& g = state.grid();
  const auto balls = ball_integrals(local_energy_density(state), r);
  std::size_t best = 0;
  for (std::size_t k = 1; k < balls.size(); ++k)
    if (balls[k] > balls[best]) best = k;
  ConcentrationReport rep;
  rep.t = state.t;
  rep.r = r;
  rep.x = g.x(static_cast<int>(best % g.nx()));
  rep.y = g.y(static_cast<int>(best / g.nx()));
  rep.value = std::max(balls[best], 0.0);
  rep.flagged = eps0 > 0.0 && rep.value >= eps0 * eps0;
  return rep;
}

double horizon_tau0(double eps0, double e0) { return std::pow(std::pow(eps0, 4) / e0, 5); }

double horizon_T0(double tau0, double R0) { return tau0 * R0 * R0 * R0; }

HorizonEstimate horizon_estimate(const State& state, double eps0) {
  if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  const auto& g = state.grid();
  const auto density = local_energy_density(state);
  HorizonEstimate h;
  h.eps0 = eps0;
  h.e0 = integral(density);
  const auto e = energies(state, ApproximationParams{});
  h.E0 = e.kinetic + e.potential + e.heat;
  const double threshold = eps0 * eps0;
  auto admissible = [&](double r) { return max_value(ball_integrals(density, 2.0 * r)) <= threshold; };

  double lo = 1.5 * g.h();
  double hi = 1.0;
  if (admissible(hi)) {
    h.R0 = hi;
  } else {
    if (!admissible(lo)) {
      throw GridScaleConcentrationError(
          "local energy exceeds eps0^2 even on balls of radius " + std::to_string(2.0 * lo) +
          " (3 grid cells); concentration at grid scale");
    }
    while (hi - lo > 0.25 * g.h()) {
      const double mid = 0.5 * (lo + hi);
      (admissible(mid) ? lo : hi) = mid;
    }
    h.R0 = lo;
  }
  h.tau0 = horizon_tau0(eps0, h.e0);
  h.T0 = horizon_T0(h.tau0, h.R0);
  return h;
}

double calibrate_eps0(const TorusGrid& grid) {
  const double a = 4.0 * grid.h();
  State s(grid);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i), y = grid.y(j);
      const double rho2 = 4.0 * std::pow(std::sin(0.5 * x), 2) + 4.0 * std::pow(std::sin(0.5 * y), 2);
      const double v0 = 2.0 * a * std::sin(x);
      const double v1 = 2.0 * a * std::sin(y);
      const double v2 = a * a - rho2;
      const double n = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
      s.d[0](i, j) = v0 / n;
      s.d[1](i, j) = v1 / n;
      s.d[2](i, j) = v2 / n;
    }
  }
  return std::sqrt(0.1 * integral(local_energy_density(s)));
}

// ---- inequalities -----------------------------------------------------------

double inequality_calibration(InequalityKind kind) {
  static std::once_flag once;
  static double korn = 0.0, lady = 0.0;
  std::call_once(once, [] {
    const TorusGrid g(64, 64);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      State s(g);
      s.u = perp_gradient(random_bandlimited(g, 6, 1.0, seed));
      korn = std::max(korn, korn_raw(s.u).ratio);
      lady = std::max(lady, ladyzhenskaya_raw({s}, 1.0).ratio);
    }
    korn *= 2.0;
    lady *= 2.0;
  });
  return kind == InequalityKind::korn ? korn : lady;
}

InequalityReport korn_ratio(const VectorField& u) {
  auto r = korn_raw(u);
  r.calibration = inequality_calibration(InequalityKind::korn);
  r.within_calibration = r.ratio <= r.calibration;
  return r;
}

InequalityReport ladyzhenskaya_ratio(const std::vector<State>& trajectory, double R) {
  auto r = ladyzhenskaya_raw(trajectory, R);
  r.calibration = inequality_calibration(InequalityKind::ladyzhenskaya);
  r.within_calibration = r.ratio <= r.calibration;
  return r;
}

InequalityReport inequality_ratio(const std::vector<State>& trajectory, InequalityKind kind,
                                  double R) {
  if (trajectory.empty()) throw UsageError("inequality ratio needs at least one snapshot");
  if (kind == InequalityKind::korn) return korn_ratio(trajectory.back().u);
  return ladyzhenskaya_ratio(trajectory, R);
}

// ---- cutoff and heat --------------------------------------------------------

CutoffBoundReport cutoff_energy_bound_check(const State& state, double M) {
  if (!(M > 0.0)) throw ConfigError("cutoff M must be positive");
  const auto g2 = grad_d_squared(differentiate(state));
  ScalarField chi2(state.grid());
  for (std::size_t k = 0; k < g2.size(); ++k) {
    const double c = chi_cutoff(g2[k], M);
    chi2[k] = c * c;
  }
  CutoffBoundReport r;
  r.integral = integral(chi2);
  r.bound = M * M * kDomainArea;
  r.quoted_bound = 4.0 * kPi * M * M;
  r.within_bound = r.integral <= r.bound * (1.0 + 1e-12);
  r.within_quoted_bound = r.integral <= r.quoted_bound * (1.0 + 1e-12);
  return r;
}

HeatBudget::HeatBudget(ApproximationParams params, double q) : params_(std::move(params)), q_(q) {
  if (!(q > 1.0 && q < 4.0 / 3.0)) throw ConfigError("gradient exponent q must lie in (1, 4/3)");
}

void HeatBudget::add(const State& state) {
  const auto der = differentiate(state);
  ScalarField gq(state.grid());
  for (std::size_t k = 0; k < gq.size(); ++k) gq[k] = std::pow(sum_sq(der.grad_theta, k), 0.5 * q_);
  const double grad = integral(gq);
  const double diss = integral(heat_source(state, der, params_));
  heat_ = integral(state.theta);
  if (!started_) {
    Q_ = heat_;
    started_ = true;
  } else {
    const double dt = state.t - t_;
    if (!(dt > 0.0)) throw UsageError("heat budget snapshots must arrive in increasing time");
    grad_q_ += 0.5 * dt * (grad + last_grad_);
    Q_ += 0.5 * dt * (diss + last_diss_);
  }
  t_ = state.t;
  last_grad_ = grad;
  last_diss_ = diss;
}

// ---- recorder ---------------------------------------------------------------

DiagnosticsRecorder::DiagnosticsRecorder(ApproximationParams params, RecorderConfig config)
    : params_(std::move(params)), config_(std::move(config)) {
  config_.entropy.validate();
  if (config_.eps0 > 0.0 && !(config_.r_monitor > 0.0)) {
    throw ConfigError("a concentration threshold needs a positive monitor radius");
  }
}

DiagnosticsRow DiagnosticsRecorder::base_row(const State& s) const {
  DiagnosticsRow row;
  row.energy = energies(s, params_);
  const auto rep = summarize(s, 0.0);
  row.min_theta = rep.min_theta;
  row.max_d_norm_dev = rep.max_d_norm_dev;
  row.entropy_min.assign(config_.entropy.alphas.size(), kNaN);
  bool monitor_done = false;
  if (!config_.radii.empty() || config_.eps0 > 0.0) {
    const auto density = local_energy_density(s);
    for (double r : config_.radii) {
      const double v = std::max(max_value(ball_integrals(density, r)), 0.0);
      row.local_sup.push_back(v);
      if (r == config_.r_monitor) {
        monitor_done = true;
        if (config_.eps0 > 0.0 && v >= config_.eps0 * config_.eps0) row.flags |= kFlagConcentration;
      }
    }
    if (!monitor_done && config_.eps0 > 0.0) {
      const double v = max_value(ball_integrals(density, config_.r_monitor));
      if (v >= config_.eps0 * config_.eps0) row.flags |= kFlagConcentration;
    }
  }
  const auto mp = maximum_principle_check(s, config_.theta_floor, config_.tolerance);
  if (!mp.theta_ok) row.flags |= kFlagThetaFloor;
  if (!mp.director_ok) row.flags |= kFlagDirectorNorm;
  return row;
}

void DiagnosticsRecorder::complete_pending(const State* next) {
  if (!before_ || !pending_ || next == nullptr || config_.entropy.alphas.empty()) return;
  auto& row = rows_.back();
  try {
    require_positive(*before_);
    require_positive(*pending_);
    require_positive(*next);
  } catch (const PositivityError&) {
    return;  // already visible through the theta-floor flag
  }
  const auto in = entropy_inputs(*pending_, params_);
  for (std::size_t i = 0; i < config_.entropy.alphas.size(); ++i) {
    const auto r = entropy_residual_impl(*before_, *pending_, *next, config_.entropy.alphas[i], in,
                                         config_.entropy.tolerance);
    row.entropy_min[i] = r.min;
    entropy_min_ = std::min(entropy_min_, r.min);
    entropy_max_abs_ = std::max({entropy_max_abs_, std::abs(r.min), std::abs(r.max)});
    if (r.min < -config_.entropy.tolerance) row.flags |= kFlagEntropy;
  }
}

void DiagnosticsRecorder::observe(const State& state) {
  if (finished_) throw UsageError("recorder already finished");
  if (pending_ && !(state.t > pending_->t)) {
    throw UsageError("recorder snapshots must arrive in increasing time");
  }
  complete_pending(&state);
  rows_.push_back(base_row(state));
  before_ = std::move(pending_);
  pending_ = state;
}

void DiagnosticsRecorder::finish() {
  finished_ = true;
  before_.reset();
  pending_.reset();
}

}  // namespace nlc2
