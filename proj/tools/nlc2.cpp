// nlc2 command-line driver.
//
// Exit codes: 0 success, 1 other failure (I/O, internal), 2 configuration
// error, 3 numerical failure, 4 inconclusive concentration segment.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nlc2/config.hpp"
#include "nlc2/diagnostics.hpp"
#include "nlc2/errors.hpp"
#include "nlc2/io.hpp"
#include "nlc2/limits.hpp"
#include "nlc2/timestepper.hpp"

namespace fs = std::filesystem;
using namespace nlc2;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kInconclusive = 4 };

std::string output_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.output.directory) / name).string();
}

void print_energy(const char* label, const EnergyRecord& e) {
  std::printf("%-8s t=%.6g kinetic=%.10g potential=%.10g heat=%.10g total=%.10g\n", label, e.t,
              e.kinetic, e.potential, e.heat, e.total);
}

void print_state_summary(const State& s, const RunConfig& c) {
  const auto e = energies(s, c.params);
  print_energy("energy", e);
  const auto rep = summarize(s, 0.0);
  std::printf("min_theta=%.10g max|u|=%.6g max||d|-1|=%.3g max|grad d|^2=%.6g\n", rep.min_theta,
              rep.max_u, rep.max_d_norm_dev, rep.max_grad_d_sq);
  const double eps0 = c.resolved_eps0();
  const auto sup = local_energy_sup(s, c.resolved_r_monitor(), eps0);
  std::printf("local_energy_sup r=%.6g value=%.6g at (%.4f, %.4f) eps0^2=%.6g%s\n", sup.r, sup.value,
              sup.x, sup.y, eps0 * eps0, sup.flagged ? " FLAGGED" : "");
  try {
    const auto h = horizon_estimate(s, eps0);
    std::printf("horizon eps0=%.6g e0=%.6g R0=%.6g tau0=%.6g T0=%.6g\n", h.eps0, h.e0, h.R0, h.tau0,
                h.T0);
  } catch (const GridScaleConcentrationError& ex) {
    std::printf("horizon unavailable: %s\n", ex.what());
  }
}

// Runs `initial` to t_end, writing the CSV, periodic and final checkpoints.
int run_from(const State& initial, const RunConfig& c, bool quiet) {
  fs::create_directories(c.output.directory);
  DiagnosticsRecorder recorder(c.params, recorder_config(c));
  const auto csv_path = output_path(c, c.output.diagnostics);
  const auto alphas = recorder.config().entropy.alphas;
  const auto radii = recorder.config().radii;

  RunCallbacks cb;
  cb.sample_stride = c.diagnostics.sample_stride;
  cb.on_sample = [&](const State& s, const StepReport*) {
    recorder.observe(s);
    if (!quiet) {
      const auto& row = recorder.rows().back();
      std::printf("t=%-12.6g total=%.12g min_theta=%.8g flags=%u\n", row.energy.t, row.energy.total,
                  row.min_theta, row.flags);
    }
  };
  cb.checkpoint_stride = c.diagnostics.checkpoint_stride;
  cb.on_checkpoint = [&](const State& s, std::size_t step) {
    char name[64];
    std::snprintf(name, sizeof name, "_%08zu.nlc2", step);
    write_checkpoint(s, c.params, c.theta_floor, output_path(c, c.output.checkpoint_prefix + name));
  };

  try {
    const auto traj = run(initial, c.params, c.scheme, cb);
    recorder.finish();
    write_diagnostics(recorder.rows(), alphas, radii, csv_path);
    write_checkpoint(traj.final_state, c.params, c.theta_floor,
                     output_path(c, c.output.final_checkpoint));
    std::printf("completed %zu steps to t=%.10g; diagnostics in %s\n", traj.steps,
                traj.final_state.t, csv_path.c_str());
    if (!recorder.rows().empty()) {
      std::printf("entropy residual min=%.3g max|R|=%.3g\n", recorder.entropy_min(),
                  recorder.entropy_max_abs());
    }
    return kOk;
  } catch (const RunFailure& f) {
    recorder.finish();
    write_diagnostics(recorder.rows(), alphas, radii, csv_path);
    const auto last = output_path(c, c.output.checkpoint_prefix + "_failed.nlc2");
    write_checkpoint(f.partial().final_state, c.params, c.theta_floor, last);
    std::fprintf(stderr, "numerical failure%s: %s\nlast good state written to %s\n",
                 f.degenerate_director() ? " (degenerate director)" : "", f.what(), last.c_str());
    return kNumerical;
  }
}

int run_continuation(const RunConfig& c) {
  fs::create_directories(c.output.directory);
  ContinuationOptions opt;
  opt.eps0 = c.resolved_eps0();
  opt.r_monitor = c.resolved_r_monitor();
  opt.sample_stride = c.diagnostics.sample_stride;
  const auto rep = continuation_run(c, opt);
  std::printf("eps0=%.6g r_monitor=%.6g segments=%zu events=%zu reached_t_end=%s\n", opt.eps0,
              opt.r_monitor, rep.segments.size(), rep.flags(), rep.reached_t_end ? "yes" : "no");
  for (const auto& ev : rep.events) {
    std::printf("event onset t=%.6g at (%.4f, %.4f) peak=%.6g window=%zu steps kp_drop=%.8g "
                "heat_rise=%.8g total_change=%.3g%s\n",
                ev.onset.t, ev.onset.x, ev.onset.y, ev.peak_value, ev.window_steps, ev.kp_drop,
                ev.heat_rise, ev.total_change, ev.closed ? "" : " (open at t_end)");
  }
  std::string csv = "t,kinetic,potential,heat,total,dissipation_rate\n";
  for (const auto& e : rep.energy) {
    char line[256];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.t, e.kinetic,
                  e.potential, e.heat, e.total, e.dissipation_rate);
    csv += line;
  }
  write_text_file(output_path(c, c.output.diagnostics), csv);
  write_checkpoint(rep.final_state, c.params, c.theta_floor, output_path(c, c.output.final_checkpoint));
  std::printf("bookkeeping %s\n", rep.bookkeeping_ok ? "ok" : "FAILED");
  return rep.bookkeeping_ok ? kOk : kNumerical;
}

bool looks_like_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "'");
  char magic[4] = {};
  const auto n = std::fread(magic, 1, 4, f);
  std::fclose(f);
  return n == 4 && std::memcmp(magic, "NLC2", 4) == 0;
}

int diagnose(const std::string& path) {
  if (looks_like_checkpoint(path)) {
    const auto cp = read_checkpoint(path);
    RunConfig c;
    c.nx = cp.state.grid().nx();
    c.ny = cp.state.grid().ny();
    c.params.M = cp.M;
    c.params.N = cp.N;
    c.params.mode = cp.mode;
    c.theta_floor = cp.theta_floor;
    std::printf("checkpoint %s: %dx%d t=%.10g M=%s N=%s mode=%s theta_floor=%s\n", path.c_str(), c.nx,
                c.ny, cp.state.t, format_double(cp.M).c_str(), format_double(cp.N).c_str(),
                to_string(cp.mode).c_str(), format_double(cp.theta_floor).c_str());
    std::printf("(dissipation uses the default viscosity; it is not stored in checkpoints)\n");
    print_state_summary(cp.state, c);
    const auto mp = maximum_principle_check(cp.state, cp.theta_floor);
    std::printf("maximum principle: %s\n", mp.passed() ? "holds" : "VIOLATED");
    return kOk;
  }
  const auto t = read_diagnostics(path);
  std::printf("diagnostics %s: %zu rows, %zu columns\n", path.c_str(), t.rows.size(), t.header.size());
  if (t.rows.empty()) return kOk;
  const auto it = t.column("t");
  const auto itot = t.column("total");
  const auto ith = t.column("min_theta");
  const auto idn = t.column("max_d_norm_dev");
  const auto ifl = t.column("flags");
  const double total0 = t.rows.front()[itot];
  double drift = 0.0, min_theta = INFINITY, max_dn = 0.0;
  unsigned flags = 0;
  std::size_t flagged_rows = 0;
  for (const auto& r : t.rows) {
    drift = std::max(drift, std::abs(r[itot] - total0) / std::abs(total0));
    min_theta = std::min(min_theta, r[ith]);
    max_dn = std::max(max_dn, r[idn]);
    const auto f = static_cast<unsigned>(r[ifl]);
    flags |= f;
    if (f) ++flagged_rows;
  }
  std::printf("t in [%.6g, %.6g]\n", t.rows.front()[it], t.rows.back()[it]);
  std::printf("max relative drift of total energy: %.3e\n", drift);
  std::printf("min theta: %.10g  max ||d|-1|: %.3e\n", min_theta, max_dn);
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k].rfind("entropy_min_res_", 0) != 0) continue;
    double m = INFINITY;
    for (const auto& r : t.rows)
      if (!std::isnan(r[k])) m = std::min(m, r[k]);
    std::printf("%s: min %.3e\n", t.header[k].c_str(), m);
  }
  std::printf("flagged rows: %zu (flag bits %u)\n", flagged_rows, flags);
  return kOk;
}

int study(const std::string& path) {
  const auto sc = parse_study_config(read_text_file(path));
  const auto rep = run_study(sc);
  const auto& out = sc.base.output;
  fs::create_directories(out.directory);
  write_text_file((fs::path(out.directory) / "study.csv").string(), rep.csv());
  const auto summary = rep.summary();
  write_text_file((fs::path(out.directory) / "study_summary.txt").string(), summary);
  std::fputs(summary.c_str(), stdout);
  return rep.all_completed() ? kOk : kNumerical;
}

int ic_preview(const RunConfig& c, const std::string& checkpoint) {
  const auto s = make_initial_condition(c);
  std::printf("initial condition %s on %dx%d\n", to_string(c.ic.kind).c_str(), c.nx, c.ny);
  print_state_summary(s, c);
  if (c.ic.kind == InitialKind::defect_pair) {
    const auto& g = s.grid();
    const int off = static_cast<int>(std::lround(0.5 * c.ic.separation / g.hx()));
    const int hw = std::max(2, static_cast<int>(std::lround(c.ic.core_radius / g.hx())));
    std::printf("winding numbers: %d %d\n", winding_number(s.d, g.nx() / 2 - off, g.ny() / 2, hw),
                winding_number(s.d, g.nx() / 2 + off, g.ny() / 2, hw));
  }
  if (!checkpoint.empty()) {
    write_checkpoint(s, c.params, c.theta_floor, checkpoint);
    std::printf("written to %s\n", checkpoint.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlc2: 2D periodic non-isothermal nematic liquid crystal flow"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, input_path, preview_out;
  bool continuation = false, quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run a configuration to t_end");
  run_cmd->add_option("config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  run_cmd->add_flag("--continuation", continuation,
                    "Continue through concentration events (constrained mode)");
  run_cmd->add_flag("-q,--quiet", quiet, "Do not print samples");

  auto* resume_cmd = app.add_subcommand("resume", "Continue a run from a checkpoint");
  resume_cmd->add_option("checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  resume_cmd->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  resume_cmd->add_flag("-q,--quiet", quiet, "Do not print samples");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Summarize a checkpoint or diagnostics CSV");
  diagnose_cmd->add_option("file", input_path)->required()->check(CLI::ExistingFile);

  auto* study_cmd = app.add_subcommand("study", "Run a convergence study");
  study_cmd->add_option("study-config", input_path)->required()->check(CLI::ExistingFile);

  auto* preview_cmd = app.add_subcommand("ic-preview", "Build and summarize the initial condition");
  preview_cmd->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  preview_cmd->add_option("-o,--checkpoint", preview_out, "Also write it as a checkpoint");

  app.add_subcommand("defaults", "Print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  auto dispatch = [&]() -> int {
    if (run_cmd->parsed()) {
      const auto c = load_config(config_path);
      if (continuation) return run_continuation(c);
      return run_from(make_initial_condition(c), c, quiet);
    }
    if (resume_cmd->parsed()) {
      const auto c = load_config(config_path);
      const auto cp = read_checkpoint(checkpoint_path);
      if (cp.state.grid().nx() != c.nx || cp.state.grid().ny() != c.ny) {
        throw ConfigError("checkpoint grid does not match [grid] in " + config_path);
      }
      if (cp.mode != c.params.mode) throw ConfigError("checkpoint director mode differs from [params] mode");
      if (!(cp.M == c.params.M && cp.N == c.params.N)) {
        throw ConfigError("checkpoint M/N differ from [params] M/N");
      }
      if (!(cp.state.t < c.scheme.t_end)) throw ConfigError("checkpoint is already at or past t_end");
      return run_from(cp.state, c, quiet);
    }
    if (diagnose_cmd->parsed()) return diagnose(input_path);
    if (study_cmd->parsed()) return study(input_path);
    if (preview_cmd->parsed()) return ic_preview(load_config(config_path), preview_out);
    std::fputs(defaults_reference().c_str(), stdout);
    return kOk;
  };

  try {
    return dispatch();
  } catch (const InconclusiveSegmentError& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return kInconclusive;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ResolutionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
