#include "nlc2/limits.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fields compared between levels at one sample time.
struct Snapshot {
  double t = 0.0;
  VectorField u;
  FieldTuple<6> grad_d;
  ScalarField theta;
};

struct LevelRun {
  std::vector<Snapshot> snaps;
  double grad_u_power = 0.0;  // int_Q |grad u|^{20/9}
  StudyLevel level;
};

Snapshot snapshot(const State& s) {
  Snapshot out{s.t, s.u, FieldTuple<6>(s.grid()), s.theta};
  for (std::size_t a = 0; a < 3; ++a) {
    const auto g = gradient(s.d[a]);
    out.grad_d[2 * a] = g[0];
    out.grad_d[2 * a + 1] = g[1];
  }
  return out;
}

double grad_u_power(const State& s) {
  const auto g0 = gradient(s.u[0]);
  const auto g1 = gradient(s.u[1]);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.grid().size(); ++k) {
    const double f2 = g0[0][k] * g0[0][k] + g0[1][k] * g0[1][k] + g1[0][k] * g1[0][k] +
                      g1[1][k] * g1[1][k];
    sum += std::pow(f2, 10.0 / 9.0);
  }
  return sum * s.grid().cell_area();
}

LevelRun run_level(const StudyConfig& sc, std::size_t index, const State& initial) {
  LevelRun out;
  out.level.value = sc.ladder[index];
  const RunConfig cfg = sc.level_config(index);
  const double interval = cfg.scheme.t_end / static_cast<double>(sc.samples);
  const double ratio = interval / cfg.scheme.dt;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-6 * ratio) {
    throw ConfigError("study level " + format_double(out.level.value) +
                      ": t_end / samples must be a multiple of dt");
  }
  double last_t = 0.0, last_p = 0.0;
  bool first = true;
  std::size_t step = 0;
  RunCallbacks cb;
  cb.sample_stride = 1;
  cb.on_sample = [&](const State& s, const StepReport* rep) {
    const double p = grad_u_power(s);
    if (!first) out.grad_u_power += 0.5 * (s.t - last_t) * (p + last_p);
    if (rep != nullptr) ++step;
    if (first || step % stride == 0) out.snaps.push_back(snapshot(s));
    first = false;
    last_t = s.t;
    last_p = p;
  };
  State start = initial;
  start.p = pressure_solve(start, cfg.params);
  try {
    const auto traj = run(start, cfg.params, cfg.scheme, cb);
    out.level.completed = true;
    out.level.steps = traj.steps;
    out.level.t_reached = traj.final_state.t;
  } catch (const RunFailure& e) {
    out.level.completed = false;
    out.level.failure = e.what();
    out.level.steps = e.partial().steps;
    out.level.t_reached = e.partial().final_state.t;
  }
  const double n = cfg.params.N;
  out.level.power_law_norm = std::isinf(n) ? 0.0 : std::pow(out.grad_u_power, 11.0 / 20.0) / n;
  return out;
}

struct Distance {
  double u = 0.0, grad_d = 0.0, theta = 0.0;
};

Distance distance(const LevelRun& a, const LevelRun& b, double q) {
  const std::size_t n = std::min(a.snaps.size(), b.snaps.size());
  if (n == 0) return {kNaN, kNaN, kNaN};
  Distance d;
  double su = 0.0, sg = 0.0, st = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0;
    if (n > 1) {
      w = 0.0;
      if (k > 0) w += 0.5 * (a.snaps[k].t - a.snaps[k - 1].t);
      if (k + 1 < n) w += 0.5 * (a.snaps[k + 1].t - a.snaps[k].t);
    }
    const auto& x = a.snaps[k];
    auto y = b.snaps[k];
    const auto& g = x.theta.grid();
    if (!(y.theta.grid() == g)) {
      for (std::size_t i = 0; i < 2; ++i) y.u[i] = resample(y.u[i], g);
      for (std::size_t c = 0; c < 6; ++c) y.grad_d[c] = resample(y.grad_d[c], g);
      y.theta = resample(y.theta, g);
    }
    double iu = 0.0, ig = 0.0, it = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      for (std::size_t i = 0; i < 2; ++i) iu += std::pow(x.u[i][j] - y.u[i][j], 2);
      for (std::size_t c = 0; c < 6; ++c) ig += std::pow(x.grad_d[c][j] - y.grad_d[c][j], 2);
      it += std::pow(std::abs(x.theta[j] - y.theta[j]), q);
    }
    su += w * iu * g.cell_area();
    sg += w * ig * g.cell_area();
    st += w * it * g.cell_area();
  }
  d.u = std::sqrt(su);
  d.grad_d = std::sqrt(sg);
  d.theta = std::pow(st, 1.0 / q);
  return d;
}

}  // namespace

std::string to_string(StudyParameter p) {
  switch (p) {
    case StudyParameter::n: return "n";
    case StudyParameter::M: return "M";
    case StudyParameter::N: return "N";
    case StudyParameter::dt: return "dt";
  }
  return "?";
}

void StudyConfig::validate() const {
  base.validate();
  if (ladder.size() < 3) throw ConfigError("[study] ladder: needs at least 3 values");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (!(ladder[i] > ladder[i - 1])) throw ConfigError("[study] ladder: must be strictly increasing");
  }
  if (samples < 1) throw ConfigError("[study] samples: must be >= 1");
  if (!(q > 1.0 && q < 4.0 / 3.0)) throw ConfigError("[study] q: must lie in (1, 4/3)");
  if (base.scheme.adapt) throw ConfigError("[scheme] adapt: studies need a fixed step");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (vary == StudyParameter::n && ladder[i] != std::floor(ladder[i])) {
      throw ConfigError("[study] ladder: n values must be integers");
    }
    level_config(i).validate();
  }
}

std::size_t StudyConfig::reference_index() const {
  return vary == StudyParameter::dt ? 0 : ladder.size() - 1;
}

RunConfig StudyConfig::level_config(std::size_t i) const {
  RunConfig c = base;
  const double v = ladder.at(i);
  switch (vary) {
    case StudyParameter::n: c.params.n = static_cast<int>(v); break;
    case StudyParameter::M: c.params.M = v; break;
    case StudyParameter::N: c.params.N = v; break;
    case StudyParameter::dt: c.scheme.dt = v; break;
  }
  return c;
}

StudyConfig parse_study_config(const std::string& text) {
  StudyConfig sc;
  sc.base = parse_config(text);
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  boost::property_tree::read_ini(in, tree);
  const auto section = tree.get_child_optional("study");
  if (!section) throw ConfigError("missing section [study]");
  bool have_vary = false, have_ladder = false;
  for (const auto& [name, value] : *section) {
    const std::string key = "[study] " + name;
    const std::string v = value.data();
    if (name == "vary") {
      if (v == "n") sc.vary = StudyParameter::n;
      else if (v == "M") sc.vary = StudyParameter::M;
      else if (v == "N") sc.vary = StudyParameter::N;
      else if (v == "dt") sc.vary = StudyParameter::dt;
      else throw ConfigError(key + ": expected n|M|N|dt, got '" + v + "'");
      have_vary = true;
    } else if (name == "ladder") {
      std::stringstream ss(v);
      std::string item;
      sc.ladder.clear();
      while (std::getline(ss, item, ','))
        if (item.find_first_not_of(" \t") != std::string::npos) sc.ladder.push_back(parse_double(item, key));
      have_ladder = true;
    } else if (name == "samples") {
      const double s = parse_double(v, key);
      if (s < 1 || s != std::floor(s)) throw ConfigError(key + ": must be a positive integer");
      sc.samples = static_cast<std::size_t>(s);
    } else if (name == "q") {
      sc.q = parse_double(v, key);
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
  if (!have_vary) throw ConfigError("missing required key [study] vary");
  if (!have_ladder) throw ConfigError("missing required key [study] ladder");
  sc.validate();
  return sc;
}

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  RateFit f;
  f.points = lx.size();
  if (f.points < 2) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    f.points = 0;
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) ss += std::pow(ly[i] - (f.intercept + f.slope * lx[i]), 2);
  f.residual = std::sqrt(ss / lx.size());
  return f;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("NLC2_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

bool StudyReport::all_completed() const {
  for (const auto& l : levels)
    if (!l.completed) return false;
  return true;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const State initial = make_initial_condition(config.base);
  const std::size_t n = config.ladder.size();
  std::vector<LevelRun> runs(n);
  std::vector<std::string> errors(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        runs[i] = run_level(config, i, initial);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw ConfigError("study level " + std::to_string(i) + ": " + errors[i]);
  }

  StudyReport rep;
  rep.vary = config.vary;
  rep.reference = config.reference_index();
  const auto& ref = runs[rep.reference];
  for (std::size_t i = 0; i < n; ++i) {
    auto lvl = runs[i].level;
    const auto d = distance(runs[i], ref, config.q);
    lvl.diff_u = d.u;
    lvl.diff_grad_d = d.grad_d;
    lvl.diff_theta = d.theta;
    // next finer level: toward the reference end of the ladder
    const bool up = rep.reference > i;
    if (i != rep.reference) lvl.step_u = distance(runs[i], runs[up ? i + 1 : i - 1], config.q).u;
    rep.levels.push_back(lvl);
  }

  std::vector<double> xs, ys, inv_n, pl;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = rep.levels[i];
    if (i != rep.reference && l.completed) {
      xs.push_back(l.value);
      ys.push_back(l.diff_u);
    }
    if (config.vary == StudyParameter::N && l.completed) {
      inv_n.push_back(1.0 / l.value);
      pl.push_back(l.power_law_norm);
    }
  }
  rep.rate_u = fit_loglog(xs, ys);
  rep.power_law_rate = fit_loglog(inv_n, pl);

  // Walk from the coarsest level toward the reference.
  std::vector<double> steps;
  if (rep.reference == n - 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) steps.push_back(rep.levels[i].step_u);
  } else {
    for (std::size_t i = n - 1; i > 0; --i) steps.push_back(rep.levels[i].step_u);
  }
  for (std::size_t i = 1; i < steps.size(); ++i) {
    const double floor = 0.1 * steps.front();
    if (steps[i] > 1.1 * steps[i - 1] && steps[i] > floor) rep.monotone = false;
  }
  return rep;
}

std::string StudyReport::csv() const {
  std::string out =
      "value,completed,steps,t_reached,diff_u,diff_grad_d,diff_theta,step_u,power_law_norm\n";
  char buf[512];
  for (const auto& l : levels) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", l.value,
                  l.completed ? 1 : 0, l.steps, l.t_reached, l.diff_u, l.diff_grad_d, l.diff_theta,
                  l.step_u, l.power_law_norm);
    out += buf;
  }
  return out;
}

std::string StudyReport::summary() const {
  std::string out = "study over " + to_string(vary) + ", reference " +
                    format_double(levels.at(reference).value) + "\n";
  char buf[256];
  for (const auto& l : levels) {
    std::snprintf(buf, sizeof buf, "  %-10s |u-u_ref| %.3e  |grad d diff| %.3e  |theta diff| %.3e  power-law %.3e%s\n",
                  format_double(l.value).c_str(), l.diff_u, l.diff_grad_d, l.diff_theta,
                  l.power_law_norm, l.completed ? "" : ("  FAILED: " + l.failure).c_str());
    out += buf;
  }
  if (rate_u.valid()) {
    std::snprintf(buf, sizeof buf, "  rate of |u - u_ref| in %s: %.3f (fit rms %.2e)\n",
                  to_string(vary).c_str(), rate_u.slope, rate_u.residual);
    out += buf;
  }
  if (power_law_rate.valid()) {
    std::snprintf(buf, sizeof buf, "  power-law norm vs 1/N slope: %.3f (fit rms %.2e)\n",
                  power_law_rate.slope, power_law_rate.residual);
    out += buf;
  }
  out += std::string("  successive differences monotone: ") + (monotone ? "yes" : "no") + "\n";
  return out;
}

// ---- continuation -------------------------------------------------------------

ContinuationReport continuation_run(const State& initial, const RunConfig& config,
                                    const ContinuationOptions& opt) {
  config.validate();
  if (config.params.mode != DirectorMode::constrained) {
    throw ConfigError("[params] mode: continuation runs need the constrained director");
  }
  if (!(opt.eps0 > 0.0)) throw ConfigError("continuation needs eps0 > 0");
  if (opt.max_segments < 1) throw ConfigError("continuation needs max_segments >= 1");
  const auto& params = config.params;
  const double r = opt.r_monitor > 0.0 ? opt.r_monitor : config.resolved_r_monitor();

  ContinuationReport rep;
  State state = initial;
  rep.initial = energies(state, params);
  rep.energy.push_back(rep.initial);

  Stepper stepper(params, config.scheme);
  rep.segments.push_back(Segment{state.t, state.t, 0});
  std::size_t step = 0;
  const std::size_t stride = std::max<std::size_t>(1, opt.sample_stride);

  // Steps through one flagged window; returns false once max_segments is hit.
  auto handle_event = [&](const ConcentrationReport& mon, const EnergyRecord& before) {
    ConcentrationEvent ev;
    ev.onset = mon;
    ev.peak_value = mon.value;
    ev.before = before;
    std::size_t bridge = 0;
    bool clear = false;
    while (stepper.next_dt(state) > 0.0) {
      stepper.advance(state);
      ++step;
      ++ev.window_steps;
      ++rep.segments.back().steps;
      if (clear) {
        if (++bridge >= opt.bridge_steps) break;
        continue;
      }
      const auto m = local_energy_sup(state, r, opt.eps0);
      ev.peak_value = std::max(ev.peak_value, m.value);
      if (!m.flagged) clear = true;
      if (ev.window_steps > opt.max_window_steps) {
        throw InconclusiveSegmentError(
            "concentration flagged at t=" + std::to_string(ev.onset.t) + " did not clear within " +
            std::to_string(opt.max_window_steps) + " steps; the event is not resolved");
      }
    }
    ev.closed = clear && bridge >= opt.bridge_steps;
    ev.after = energies(state, params);
    ev.kp_drop = (ev.before.kinetic + ev.before.potential) - (ev.after.kinetic + ev.after.potential);
    ev.heat_rise = ev.after.heat - ev.before.heat;
    ev.total_change = ev.after.total - ev.before.total;
    ev.onset.energy_drop = ev.kp_drop;
    rep.energy.push_back(ev.before);
    rep.energy.push_back(ev.after);
    if (ev.closed) {
      const bool drop_ok = ev.kp_drop >= opt.drop_fraction * opt.eps0 * opt.eps0;
      const bool total_ok = std::abs(ev.total_change) <= opt.total_tolerance * std::abs(rep.initial.total);
      rep.bookkeeping_ok = rep.bookkeeping_ok && drop_ok && total_ok && ev.heat_rise > 0.0;
    }
    rep.events.push_back(ev);

    // restart the next segment from the post-window state
    rep.segments.back().t_end = state.t;
    if (rep.events.size() >= opt.max_segments) return false;
    state.d = renormalize_director(state.d);
    state.p = pressure_solve(state, params);
    stepper.reset();
    rep.segments.push_back(Segment{state.t, state.t, 0});
    return true;
  };

  // Initial data may already carry a flagged quantum (e.g. defect cores).
  const auto mon0 = local_energy_sup(state, r, opt.eps0);
  bool more = !mon0.flagged || handle_event(mon0, rep.initial);
  State previous = state;
  while (more && stepper.next_dt(state) > 0.0) {
    previous = state;
    stepper.advance(state);
    ++step;
    ++rep.segments.back().steps;
    if (step % stride == 0) rep.energy.push_back(energies(state, params));
    const auto mon = local_energy_sup(state, r, opt.eps0);
    if (mon.flagged) more = handle_event(mon, energies(previous, params));
  }
  rep.segments.back().t_end = state.t;
  rep.reached_t_end = stepper.next_dt(state) <= 0.0;
  std::stable_sort(rep.energy.begin(), rep.energy.end(),
            [](const EnergyRecord& a, const EnergyRecord& b) { return a.t < b.t; });
  rep.final_state = std::move(state);
  return rep;
}

ContinuationReport continuation_run(const RunConfig& config, const ContinuationOptions& options) {
  return continuation_run(make_initial_condition(config), config, options);
}

}  // namespace nlc2
