#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "nlc2/config.hpp"
#include "nlc2/diagnostics.hpp"
#include "nlc2/errors.hpp"
#include "nlc2/io.hpp"
#include "nlc2/limits.hpp"
#include "nlc2/timestepper.hpp"

namespace py = pybind11;
using namespace nlc2;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (ny, nx) arrays, row j = y_j.
Array to_array(const ScalarField& f) {
  const auto& g = f.grid();
  Array a({g.ny(), g.nx()});
  std::memcpy(a.mutable_data(), f.raw().data(), f.size() * sizeof(double));
  return a;
}

template <std::size_t C>
Array to_array(const FieldTuple<C>& f) {
  const auto& g = f[0].grid();
  Array a({static_cast<py::ssize_t>(C), static_cast<py::ssize_t>(g.ny()),
           static_cast<py::ssize_t>(g.nx())});
  for (std::size_t c = 0; c < C; ++c)
    std::memcpy(a.mutable_data() + c * g.size(), f[c].raw().data(), g.size() * sizeof(double));
  return a;
}

ScalarField from_array(const TorusGrid& g, const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != g.ny() || a.shape(1) != g.nx()) {
    throw ConfigError("expected an array of shape (" + std::to_string(g.ny()) + ", " +
                      std::to_string(g.nx()) + ")");
  }
  return ScalarField(g, std::vector<double>(a.data(), a.data() + g.size()));
}

ScalarField field_from_array(const Array& a) {
  if (a.ndim() != 2) throw ConfigError("expected a 2-D array");
  return from_array(TorusGrid(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))), a);
}

template <std::size_t C>
FieldTuple<C> tuple_from_array(const TorusGrid& g, const Array& a) {
  if (a.ndim() != 3 || a.shape(0) != static_cast<py::ssize_t>(C) || a.shape(1) != g.ny() ||
      a.shape(2) != g.nx()) {
    throw ConfigError("expected an array of shape (" + std::to_string(C) + ", " +
                      std::to_string(g.ny()) + ", " + std::to_string(g.nx()) + ")");
  }
  FieldTuple<C> out;
  for (std::size_t c = 0; c < C; ++c)
    out[c] = ScalarField(g, std::vector<double>(a.data() + c * g.size(), a.data() + (c + 1) * g.size()));
  return out;
}

py::dict energy_dict(const EnergyRecord& e) {
  py::dict d;
  d["t"] = e.t;
  d["kinetic"] = e.kinetic;
  d["potential"] = e.potential;
  d["heat"] = e.heat;
  d["total"] = e.total;
  d["dissipation_rate"] = e.dissipation_rate;
  return d;
}

py::dict concentration_dict(const ConcentrationReport& r) {
  py::dict d;
  d["t"] = r.t;
  d["r"] = r.r;
  d["x"] = r.x;
  d["y"] = r.y;
  d["value"] = r.value;
  d["flagged"] = r.flagged;
  d["energy_drop"] = r.energy_drop;
  return d;
}

// Steps a state under one configuration; keeps the multistep history.
class Simulation {
 public:
  Simulation(RunConfig config, std::optional<State> state)
      : config_(std::move(config)), stepper_(config_.params, config_.scheme) {
    config_.validate();
    state_ = state ? std::move(*state) : make_initial_condition(config_);
  }

  const State& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  bool done() const { return stepper_.next_dt(state_) <= 0.0; }

  std::size_t advance(std::size_t steps) {
    std::size_t taken = 0;
    while (taken < steps && !done()) {
      stepper_.advance(state_);
      ++taken;
    }
    return taken;
  }

  std::size_t run_to_end() { return advance(static_cast<std::size_t>(-1)); }

 private:
  RunConfig config_;
  Stepper stepper_;
  State state_;
};

}  // namespace

PYBIND11_MODULE(_nlc2, m) {
  m.doc() = "2D periodic pseudo-spectral solver for non-isothermal nematic liquid crystal flow";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<InconclusiveSegmentError>(m, "InconclusiveSegmentError", base.ptr());

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("nx", &RunConfig::nx)
      .def_readwrite("ny", &RunConfig::ny)
      .def_readwrite("theta_floor", &RunConfig::theta_floor)
      .def_property(
          "dt", [](const RunConfig& c) { return c.scheme.dt; },
          [](RunConfig& c, double v) { c.scheme.dt = v; })
      .def_property(
          "t_end", [](const RunConfig& c) { return c.scheme.t_end; },
          [](RunConfig& c, double v) { c.scheme.t_end = v; })
      .def_property(
          "M", [](const RunConfig& c) { return c.params.M; },
          [](RunConfig& c, double v) { c.params.M = v; })
      .def_property(
          "N", [](const RunConfig& c) { return c.params.N; },
          [](RunConfig& c, double v) { c.params.N = v; })
      .def_property_readonly("constrained",
                             [](const RunConfig& c) { return c.params.mode == DirectorMode::constrained; })
      .def_property_readonly("eps0", &RunConfig::resolved_eps0)
      .def_property_readonly("r_monitor", &RunConfig::resolved_r_monitor)
      .def("validate", &RunConfig::validate)
      .def("to_ini", [](const RunConfig& c) { return print_config(c); })
      .def(py::self == py::self)
      .def("__repr__", [](const RunConfig& c) {
        return "<RunConfig " + std::to_string(c.nx) + "x" + std::to_string(c.ny) + " ic=" +
               to_string(c.ic.kind) + " t_end=" + format_double(c.scheme.t_end) + ">";
      });

  m.def("parse_config", &parse_config, py::arg("text"), "Parse and validate INI text.");
  m.def("load_config", &load_config, py::arg("path"));
  m.def("defaults_reference", &defaults_reference);

  py::class_<State>(m, "State")
      .def(py::init([](int nx, int ny) { return State(TorusGrid(nx, ny)); }), py::arg("nx"),
           py::arg("ny"))
      .def_property_readonly("nx", [](const State& s) { return s.grid().nx(); })
      .def_property_readonly("ny", [](const State& s) { return s.grid().ny(); })
      .def_readwrite("t", &State::t)
      .def_property(
          "u", [](const State& s) { return to_array(s.u); },
          [](State& s, const Array& a) { s.u = tuple_from_array<2>(s.grid(), a); })
      .def_property(
          "d", [](const State& s) { return to_array(s.d); },
          [](State& s, const Array& a) { s.d = tuple_from_array<3>(s.grid(), a); })
      .def_property(
          "theta", [](const State& s) { return to_array(s.theta); },
          [](State& s, const Array& a) { s.theta = from_array(s.grid(), a); })
      .def_property(
          "p", [](const State& s) { return to_array(s.p); },
          [](State& s, const Array& a) { s.p = from_array(s.grid(), a); })
      .def("copy", [](const State& s) { return State(s); });

  m.def("initial_condition", py::overload_cast<const RunConfig&>(&make_initial_condition),
        py::arg("config"));

  py::class_<Simulation>(m, "Simulation")
      .def(py::init<RunConfig, std::optional<State>>(), py::arg("config"),
           py::arg("state") = py::none())
      .def_property_readonly("state", &Simulation::state)
      .def_property_readonly("t", [](const Simulation& s) { return s.state().t; })
      .def_property_readonly("done", &Simulation::done)
      .def("advance", &Simulation::advance, py::arg("steps") = 1,
           py::call_guard<py::gil_scoped_release>(), "Take up to `steps` steps; returns the count.")
      .def("run", &Simulation::run_to_end, py::call_guard<py::gil_scoped_release>());

  m.def(
      "energies",
      [](const State& s, const RunConfig& c) { return energy_dict(energies(s, c.params)); },
      py::arg("state"), py::arg("config"));
  m.def(
      "run_diagnostics",
      [](const RunConfig& c) {
        DiagnosticsRecorder rec(c.params, recorder_config(c));
        RunCallbacks cb;
        cb.sample_stride = c.diagnostics.sample_stride;
        cb.on_sample = [&](const State& s, const StepReport*) { rec.observe(s); };
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = run(make_initial_condition(c), c.params, c.scheme, cb);
          rec.finish();
        }
        return py::make_tuple(traj.final_state,
                              format_diagnostics(rec.rows(), rec.config().entropy.alphas,
                                                 rec.config().radii));
      },
      py::arg("config"), "Run to t_end; returns (final state, diagnostics CSV text).");

  m.def(
      "local_energy_sup",
      [](const State& s, double r, double eps0) {
        return concentration_dict(local_energy_sup(s, r, eps0));
      },
      py::arg("state"), py::arg("r"), py::arg("eps0"));
  m.def(
      "horizon_estimate",
      [](const State& s, double eps0) {
        const auto h = horizon_estimate(s, eps0);
        py::dict d;
        d["eps0"] = h.eps0;
        d["e0"] = h.e0;
        d["E0"] = h.E0;
        d["R0"] = h.R0;
        d["tau0"] = h.tau0;
        d["T0"] = h.T0;
        return d;
      },
      py::arg("state"), py::arg("eps0"));
  m.def("horizon_tau0", &horizon_tau0, py::arg("eps0"), py::arg("e0"));
  m.def("horizon_T0", &horizon_T0, py::arg("tau0"), py::arg("R0"));
  m.def(
      "calibrate_eps0", [](int nx, int ny) { return calibrate_eps0(TorusGrid(nx, ny)); },
      py::arg("nx"), py::arg("ny"));
  m.def(
      "winding_number",
      [](const State& s, int i, int j, int half_width) { return winding_number(s.d, i, j, half_width); },
      py::arg("state"), py::arg("i"), py::arg("j"), py::arg("half_width"));

  m.def(
      "derivative",
      [](const Array& f, int axis) {
        if (axis != 0 && axis != 1) throw ConfigError("axis must be 0 (x) or 1 (y)");
        return to_array(partial(field_from_array(f), axis == 0 ? Axis::x : Axis::y));
      },
      py::arg("field"), py::arg("axis"), "Spectral derivative of a (ny, nx) field; axis 0 is x.");
  m.def(
      "laplacian", [](const Array& f) { return to_array(laplacian(field_from_array(f))); },
      py::arg("field"));
  m.def(
      "leray_project",
      [](const Array& u) {
        if (u.ndim() != 3) throw ConfigError("expected an array of shape (2, ny, nx)");
        const TorusGrid g(static_cast<int>(u.shape(2)), static_cast<int>(u.shape(1)));
        return to_array(leray_project(tuple_from_array<2>(g, u)));
      },
      py::arg("u"));

  m.def(
      "write_checkpoint",
      [](const State& s, const RunConfig& c, const std::string& path) {
        write_checkpoint(s, c.params, c.theta_floor, path);
      },
      py::arg("state"), py::arg("config"), py::arg("path"));
  m.def(
      "read_checkpoint",
      [](const std::string& path) {
        auto cp = read_checkpoint(path);
        py::dict meta;
        meta["M"] = cp.M;
        meta["N"] = cp.N;
        meta["constrained"] = cp.mode == DirectorMode::constrained;
        meta["theta_floor"] = cp.theta_floor;
        return py::make_tuple(std::move(cp.state), meta);
      },
      py::arg("path"));

  m.def(
      "continuation_run",
      [](const RunConfig& c, double eps0) {
        ContinuationOptions opt;
        opt.eps0 = eps0 > 0.0 ? eps0 : c.resolved_eps0();
        opt.r_monitor = c.resolved_r_monitor();
        ContinuationReport rep;
        {
          py::gil_scoped_release release;
          rep = continuation_run(c, opt);
        }
        py::list events;
        for (const auto& ev : rep.events) {
          py::dict d;
          d["onset"] = concentration_dict(ev.onset);
          d["peak_value"] = ev.peak_value;
          d["before"] = energy_dict(ev.before);
          d["after"] = energy_dict(ev.after);
          d["kp_drop"] = ev.kp_drop;
          d["heat_rise"] = ev.heat_rise;
          d["total_change"] = ev.total_change;
          d["window_steps"] = ev.window_steps;
          d["closed"] = ev.closed;
          events.append(d);
        }
        py::dict out;
        out["events"] = events;
        out["initial"] = energy_dict(rep.initial);
        out["reached_t_end"] = rep.reached_t_end;
        out["bookkeeping_ok"] = rep.bookkeeping_ok;
        out["final_state"] = rep.final_state;
        return out;
      },
      py::arg("config"), py::arg("eps0") = 0.0);

  m.def(
      "run_study",
      [](const std::string& text) {
        const auto sc = parse_study_config(text);
        StudyReport rep;
        {
          py::gil_scoped_release release;
          rep = run_study(sc);
        }
        return py::make_tuple(rep.csv(), rep.summary());
      },
      py::arg("text"), "Run a study from INI text; returns (csv, summary).");
}
