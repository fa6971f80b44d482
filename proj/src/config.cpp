#include "nlc2/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nlc2/diagnostics.hpp"
#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& key) {
  const auto v = parse_integer(text, key);
  if (v < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item, key));
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

template <typename E>
E parse_enum(const std::string& text, const std::string& key,
             const std::vector<std::pair<std::string, E>>& names) {
  const auto t = trim(text);
  for (const auto& [n, e] : names)
    if (n == t) return e;
  std::string allowed;
  for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + n;
  throw ConfigError(key + ": expected one of " + allowed + ", got '" + text + "'");
}

const std::vector<std::pair<std::string, InitialKind>> kKinds = {
    {"constant", InitialKind::constant},
    {"taylor_green", InitialKind::taylor_green},
    {"defect_pair", InitialKind::defect_pair},
    {"random_bandlimited", InitialKind::random_bandlimited}};
const std::vector<std::pair<std::string, Scheme>> kSchemes = {{"imex1", Scheme::imex1},
                                                               {"imex2", Scheme::imex2}};
const std::vector<std::pair<std::string, DirectorMode>> kModes = {
    {"relaxed", DirectorMode::relaxed}, {"constrained", DirectorMode::constrained}};
const std::vector<std::pair<std::string, ViscosityFamily>> kFamilies = {
    {"constant", ViscosityFamily::constant},
    {"affine_clamped", ViscosityFamily::affine_clamped},
    {"rational_bounded", ViscosityFamily::rational_bounded}};

template <typename E>
std::string enum_name(E e, const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [n, v] : names)
    if (v == e) return n;
  return "?";
}

struct Key {
  std::string section;
  std::string name;
  bool required;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define NLC2_DOUBLE(expr)                                                                  \
  [](const RunConfig& c) { return format_double(c.expr); },                                \
      [](RunConfig& c, const std::string& v, const std::string& k) { c.expr = parse_double(v, k); }
#define NLC2_COUNT(expr)                                                                   \
  [](const RunConfig& c) { return std::to_string(c.expr); },                               \
      [](RunConfig& c, const std::string& v, const std::string& k) {                        \
        c.expr = static_cast<decltype(c.expr)>(parse_count(v, k));                         \
      }
#define NLC2_INT(expr)                                                                     \
  [](const RunConfig& c) { return std::to_string(c.expr); },                               \
      [](RunConfig& c, const std::string& v, const std::string& k) {                        \
        c.expr = static_cast<decltype(c.expr)>(parse_integer(v, k));                       \
      }
#define NLC2_STRING(expr)                                                                  \
  [](const RunConfig& c) { return c.expr; },                                               \
      [](RunConfig& c, const std::string& v, const std::string&) { c.expr = trim(v); }
#define NLC2_ENUM(expr, table)                                                             \
  [](const RunConfig& c) { return enum_name(c.expr, table); },                             \
      [](RunConfig& c, const std::string& v, const std::string& k) {                        \
        c.expr = parse_enum(v, k, table);                                                  \
      }
#define NLC2_LIST(expr)                                                                    \
  [](const RunConfig& c) { return format_list(c.expr); },                                  \
      [](RunConfig& c, const std::string& v, const std::string& k) { c.expr = parse_list(v, k); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"grid", "nx", true, "grid points along x (even, >= 8)", NLC2_INT(nx)},
      {"grid", "ny", true, "grid points along y (even, >= 8)", NLC2_INT(ny)},

      {"params", "n", false, "Galerkin truncation |k| <= n per axis; 0 = 2/3-rule limit",
       NLC2_INT(params.n)},
      {"params", "M", false, "cutoff level of chi_M(|grad d|^2); inf disables the cutoff",
       NLC2_DOUBLE(params.M)},
      {"params", "N", false, "power-law regularization (1/N)|grad u|^{2/9} grad u; inf removes it",
       NLC2_DOUBLE(params.N)},
      {"params", "viscosity", false, "constant | affine_clamped | rational_bounded",
       NLC2_ENUM(params.viscosity.family, kFamilies)},
      {"params", "mu_lower", false, "lower viscosity bound", NLC2_DOUBLE(params.viscosity.mu_lower)},
      {"params", "mu_upper", false, "upper viscosity bound", NLC2_DOUBLE(params.viscosity.mu_upper)},
      {"params", "mu_intercept", false, "affine_clamped: mu = clamp(intercept + slope theta)",
       NLC2_DOUBLE(params.viscosity.intercept)},
      {"params", "mu_slope", false, "affine_clamped slope", NLC2_DOUBLE(params.viscosity.slope)},
      {"params", "mu_scale", false, "rational_bounded: theta / (theta + scale)",
       NLC2_DOUBLE(params.viscosity.scale)},
      {"params", "mode", false, "relaxed | constrained (renormalize d each step)",
       NLC2_ENUM(params.mode, kModes)},
      {"params", "theta_floor", false, "positive lower bound of the initial temperature",
       NLC2_DOUBLE(theta_floor)},

      {"scheme", "dt", true, "time step (upper bound when adapt = true)", NLC2_DOUBLE(scheme.dt)},
      {"scheme", "t_end", true, "final time T of Q_T", NLC2_DOUBLE(scheme.t_end)},
      {"scheme", "scheme", false, "imex2 (CN + AB2) | imex1 (implicit/explicit Euler)",
       NLC2_ENUM(scheme.scheme, kSchemes)},
      {"scheme", "mu_split", false, "implicit viscosity; 0 = mu_upper", NLC2_DOUBLE(scheme.mu_split)},
      {"scheme", "cfl_safety", false, "advective CFL factor in (0, 1]", NLC2_DOUBLE(scheme.cfl_safety)},
      {"scheme", "adapt", false, "shrink dt to the advective CFL limit",
       [](const RunConfig& c) { return std::string(c.scheme.adapt ? "true" : "false"); },
       [](RunConfig& c, const std::string& v, const std::string& k) { c.scheme.adapt = parse_bool(v, k); }},

      {"ic", "type", true, "constant | taylor_green | defect_pair | random_bandlimited",
       NLC2_ENUM(ic.kind, kKinds)},
      {"ic", "amplitude", false, "velocity amplitude", NLC2_DOUBLE(ic.amplitude)},
      {"ic", "director_tilt", false, "in-plane perturbation of d = e3", NLC2_DOUBLE(ic.director_tilt)},
      {"ic", "separation", false, "defect_pair: core distance", NLC2_DOUBLE(ic.separation)},
      {"ic", "core_radius", false, "defect_pair: core radius (>= 3 grid cells)",
       NLC2_DOUBLE(ic.core_radius)},
      {"ic", "polarity", false, "defect_pair: 1 = same core polarity, -1 = opposite",
       NLC2_INT(ic.polarity)},
      {"ic", "kmax", false, "random_bandlimited: highest wavenumber", NLC2_INT(ic.kmax)},
      {"ic", "theta0", false, "background temperature (>= theta_floor)", NLC2_DOUBLE(ic.theta0)},
      {"ic", "seed", false, "random seed", NLC2_COUNT(ic.seed)},

      {"diagnostics", "sample_stride", false, "steps between CSV rows",
       NLC2_COUNT(diagnostics.sample_stride)},
      {"diagnostics", "checkpoint_stride", false, "steps between checkpoints; 0 = none",
       NLC2_COUNT(diagnostics.checkpoint_stride)},
      {"diagnostics", "alphas", false, "entropy exponents in (0, 1), comma separated",
       NLC2_LIST(diagnostics.alphas)},
      {"diagnostics", "entropy_tolerance", false, "entropy residual flag threshold",
       NLC2_DOUBLE(diagnostics.entropy_tolerance)},
      {"diagnostics", "eps0", false, "concentration threshold; 0 = calibrate from a bubble",
       NLC2_DOUBLE(diagnostics.eps0)},
      {"diagnostics", "r_monitor", false, "monitor ball radius; 0 = 8 grid cells",
       NLC2_DOUBLE(diagnostics.r_monitor)},
      {"diagnostics", "radii", false, "ball radii for local_energy_sup columns; empty = r_monitor",
       NLC2_LIST(diagnostics.radii)},

      {"output", "directory", false, "output directory", NLC2_STRING(output.directory)},
      {"output", "diagnostics", false, "diagnostics CSV file name", NLC2_STRING(output.diagnostics)},
      {"output", "checkpoint_prefix", false, "periodic checkpoint prefix",
       NLC2_STRING(output.checkpoint_prefix)},
      {"output", "final_checkpoint", false, "checkpoint written at t_end",
       NLC2_STRING(output.final_checkpoint)},
  };
  return table;
}

#undef NLC2_DOUBLE
#undef NLC2_COUNT
#undef NLC2_INT
#undef NLC2_STRING
#undef NLC2_ENUM
#undef NLC2_LIST

const std::vector<std::string> kSections = {"grid", "params", "scheme", "ic", "diagnostics", "output"};

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 0.5 - 0.5 * std::cos(kPi * s);
}

double periodic_r2(double dx, double dy) {
  return 4.0 * std::pow(std::sin(0.5 * dx), 2) + 4.0 * std::pow(std::sin(0.5 * dy), 2);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return kInfinity;
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::string to_string(InitialKind kind) { return enum_name(kind, kKinds); }
std::string to_string(Scheme scheme) { return enum_name(scheme, kSchemes); }
std::string to_string(DirectorMode mode) { return enum_name(mode, kModes); }
std::string to_string(ViscosityFamily family) { return enum_name(family, kFamilies); }

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError(key + ": " + msg);
  };
  if (nx < 8 || nx % 2 != 0) fail("[grid] nx", "must be even and >= 8");
  if (ny < 8 || ny % 2 != 0) fail("[grid] ny", "must be even and >= 8");
  const auto g = grid();
  if (!(theta_floor > 0.0) || !std::isfinite(theta_floor)) {
    fail("[params] theta_floor", "must be positive (inf theta_0 >= theta_floor > 0)");
  }
  try {
    params.validate(g);
  } catch (const ConfigError& e) {
    fail("[params]", e.what());
  }
  try {
    scheme.validate(params);
  } catch (const ConfigError& e) {
    fail("[scheme]", e.what());
  }
  if (!(scheme.t_end > 0.0)) fail("[scheme] t_end", "must be positive");
  if (!(ic.theta0 >= theta_floor)) fail("[ic] theta0", "must be >= theta_floor");
  if (!(ic.amplitude >= 0.0) || !std::isfinite(ic.amplitude)) fail("[ic] amplitude", "must be >= 0");
  if (!(ic.director_tilt >= 0.0) || !std::isfinite(ic.director_tilt)) {
    fail("[ic] director_tilt", "must be >= 0");
  }
  if (ic.kind == InitialKind::defect_pair) {
    if (!(ic.core_radius > 0.0)) fail("[ic] core_radius", "must be positive");
    if (!(ic.separation > 0.0 && ic.separation <= 2.4)) fail("[ic] separation", "must lie in (0, 2.4]");
    if (ic.polarity != 1 && ic.polarity != -1) fail("[ic] polarity", "must be 1 or -1");
  }
  if (ic.kind == InitialKind::random_bandlimited && ic.kmax < 1) fail("[ic] kmax", "must be >= 1");
  if (diagnostics.sample_stride < 1) fail("[diagnostics] sample_stride", "must be >= 1");
  for (double a : diagnostics.alphas) {
    if (!(a > 0.0 && a < 1.0)) fail("[diagnostics] alphas", "entries must lie in (0, 1)");
  }
  if (!(diagnostics.entropy_tolerance >= 0.0)) fail("[diagnostics] entropy_tolerance", "must be >= 0");
  if (!(diagnostics.eps0 >= 0.0) || !std::isfinite(diagnostics.eps0)) {
    fail("[diagnostics] eps0", "must be >= 0");
  }
  for (double r : resolved_radii()) {
    if (r < 3.0 * g.h() || r > kPi) fail("[diagnostics] radii", "radii must lie in [3h, pi]");
  }
  const double rm = resolved_r_monitor();
  if (rm < 3.0 * g.h() || rm > kPi) fail("[diagnostics] r_monitor", "must lie in [3h, pi]");
}

double RunConfig::resolved_eps0() const {
  return diagnostics.eps0 > 0.0 ? diagnostics.eps0 : calibrate_eps0(grid());
}

double RunConfig::resolved_r_monitor() const {
  return diagnostics.r_monitor > 0.0 ? diagnostics.r_monitor : 8.0 * grid().h();
}

std::vector<double> RunConfig::resolved_radii() const {
  if (!diagnostics.radii.empty()) return diagnostics.radii;
  return {resolved_r_monitor()};
}

RecorderConfig recorder_config(const RunConfig& config) {
  RecorderConfig rc;
  rc.entropy.alphas = config.diagnostics.alphas;
  rc.entropy.tolerance = config.diagnostics.entropy_tolerance;
  rc.radii = config.resolved_radii();
  rc.eps0 = config.resolved_eps0();
  rc.r_monitor = config.resolved_r_monitor();
  rc.theta_floor = config.theta_floor;
  return rc;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("malformed config (line " + std::to_string(e.line()) + "): " + e.message());
  }

  std::map<std::string, const Key*> lookup;
  for (const auto& k : keys()) lookup[k.section + "." + k.name] = &k;

  RunConfig c;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
      if (section == "study") continue;  // consumed by parse_study_config
      throw ConfigError("unknown section [" + section + "]");
    }
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must live inside a section");
    }
    for (const auto& [name, value] : body) {
      const auto it = lookup.find(section + "." + name);
      const std::string label = "[" + section + "] " + name;
      if (it == lookup.end()) throw ConfigError("unknown key " + label);
      it->second->set(c, value.data(), label);
      seen.insert(section + "." + name);
    }
  }
  for (const auto& k : keys()) {
    if (k.required && !seen.count(k.section + "." + k.name)) {
      throw ConfigError("missing required key [" + k.section + "] " + k.name);
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string print_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

std::string defaults_reference() {
  const RunConfig defaults;
  std::string out =
      "# nlc2 configuration reference (generated by `nlc2 defaults`).\n"
      "# Keys marked REQUIRED have no default; the value shown is the built-in one.\n";
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    out += "# " + k.help + (k.required ? " (REQUIRED)" : "") + "\n";
    out += k.name + " = " + k.get(defaults) + "\n";
  }
  return out;
}

int winding_number(const DirectorField& d, int i0, int j0, int half_width) {
  const auto& g = d.grid();
  std::vector<std::pair<int, int>> loop;
  const int w = half_width;
  for (int i = -w; i < w; ++i) loop.emplace_back(i, -w);
  for (int j = -w; j < w; ++j) loop.emplace_back(w, j);
  for (int i = w; i > -w; --i) loop.emplace_back(i, w);
  for (int j = w; j > -w; --j) loop.emplace_back(-w, j);
  auto angle = [&](const std::pair<int, int>& p) {
    const int i = ((i0 + p.first) % g.nx() + g.nx()) % g.nx();
    const int j = ((j0 + p.second) % g.ny() + g.ny()) % g.ny();
    return std::atan2(d[1](i, j), d[0](i, j));
  };
  double total = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    double delta = angle(loop[(k + 1) % loop.size()]) - angle(loop[k]);
    while (delta > kPi) delta -= 2.0 * kPi;
    while (delta < -kPi) delta += 2.0 * kPi;
    total += delta;
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

State make_initial_condition(const InitialConditionSpec& spec, const TorusGrid& g,
                             const ApproximationParams& params, double theta_floor) {
  State s(g);
  for (auto& v : s.theta.values()) v = spec.theta0;
  for (auto& v : s.d[2].values()) v = 1.0;

  switch (spec.kind) {
    case InitialKind::constant:
      break;
    case InitialKind::taylor_green: {
      const double a = spec.amplitude, e = spec.director_tilt;
      for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
          const double x = g.x(i), y = g.y(j);
          s.u[0](i, j) = a * std::sin(x) * std::cos(y);
          s.u[1](i, j) = -a * std::cos(x) * std::sin(y);
          s.d[0](i, j) = e * std::cos(y);
          s.d[1](i, j) = e * std::sin(x);
        }
      }
      break;
    }
    case InitialKind::random_bandlimited: {
      const auto psi = random_bandlimited(g, spec.kmax, 1.0, spec.seed);
      const auto gp = gradient(psi);
      s.u[0] = -1.0 * gp[1];
      s.u[1] = gp[0];
      const double umax = max_value(pointwise_norm(s.u));
      if (umax > 0.0) s.u = (spec.amplitude / umax) * s.u;
      s.d[0] = spec.director_tilt * random_bandlimited(g, spec.kmax, 1.0, spec.seed + 1);
      s.d[1] = spec.director_tilt * random_bandlimited(g, spec.kmax, 1.0, spec.seed + 2);
      const auto r = random_bandlimited(g, spec.kmax, 1.0, spec.seed + 3);
      for (std::size_t k = 0; k < g.size(); ++k) s.theta[k] = spec.theta0 * (1.0 + 0.125 * (1.0 + r[k]));
      break;
    }
    case InitialKind::defect_pair: {
      const double a = spec.core_radius;
      if (a < 3.0 * g.h()) {
        throw ResolutionError("defect core radius " + std::to_string(a) +
                              " is below 3 grid cells (" + std::to_string(3.0 * g.h()) + ")");
      }
      const double x1 = -0.5 * spec.separation, x2 = 0.5 * spec.separation;
      for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
          const double x = g.x(i), y = g.y(j);
          // +1 vortex at x1, -1 vortex at x2; the window keeps the phase
          // periodic by fading it out before the cell boundary.
          const double phase = std::atan2(y, x - x1) - std::atan2(y, x - x2);
          const double window = 1.0 - smooth_step((std::hypot(x, y) - 0.6 * kPi) / (0.3 * kPi));
          const double r1 = periodic_r2(x - x1, y), r2 = periodic_r2(x - x2, y);
          const double tau = std::sqrt(r1 * r2 / ((a * a + r1) * (a * a + r2)));
          const double m1 = a * a / (a * a + r1), m2 = a * a / (a * a + r2);
          s.d[0](i, j) = tau * std::cos(window * phase);
          s.d[1](i, j) = tau * std::sin(window * phase);
          s.d[2](i, j) = m1 + spec.polarity * m2;
        }
      }
      break;
    }
  }
  s.d = renormalize_director(s.d);
  s.u = leray_project(s.u);

  const double div = max_abs(divergence(s.u));
  if (div > 1e-10 * std::max(1.0, max_abs(s.u))) {
    throw DomainError("initial velocity is not divergence-free (max |div u| = " +
                      std::to_string(div) + ")");
  }
  const auto norm = pointwise_norm(s.d);
  if (max_value(norm) > 1.0 + 1e-12) throw DomainError("initial director exceeds unit length");
  if (params.mode == DirectorMode::constrained && min_value(norm) < 1.0 - 1e-12) {
    throw DomainError("constrained mode needs a unit initial director");
  }
  if (min_value(s.theta) < theta_floor) {
    throw DomainError("initial temperature falls below theta_floor");
  }
  s.p = pressure_solve(s, params);
  return s;
}

State make_initial_condition(const RunConfig& config) {
  config.validate();
  return make_initial_condition(config.ic, config.grid(), config.params, config.theta_floor);
}

}  // namespace nlc2
