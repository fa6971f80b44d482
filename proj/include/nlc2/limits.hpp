#pragma once

// Convergence studies in n, M, N or dt against the finest level, and the
// continuation driver that runs through energy-concentration events.

#include <string>
#include <vector>

#include "nlc2/config.hpp"
#include "nlc2/diagnostics.hpp"

namespace nlc2 {

enum class StudyParameter { n, M, N, dt };

std::string to_string(StudyParameter p);

struct StudyConfig {
  RunConfig base;
  StudyParameter vary = StudyParameter::N;
  std::vector<double> ladder;  // strictly increasing, >= 3 values
  std::size_t samples = 20;    // comparison times k T / samples
  double q = 1.25;             // exponent of the theta difference norm

  void validate() const;
  // Value of the finest level: largest for n, M, N, smallest for dt.
  std::size_t reference_index() const;
  RunConfig level_config(std::size_t i) const;
};

// [study] section keys: vary, ladder, samples, q; the rest is a RunConfig.
StudyConfig parse_study_config(const std::string& text);

struct StudyLevel {
  double value = 0.0;
  bool completed = false;
  std::string failure;
  std::size_t steps = 0;
  double t_reached = 0.0;
  // Distances to the reference level over Q_T.
  double diff_u = 0.0;       // L2
  double diff_grad_d = 0.0;  // L2
  double diff_theta = 0.0;   // L^q
  // Distance to the next finer level (0 for the reference).
  double step_u = 0.0;
  // || (1/N) |grad u|^{2/9} grad u ||_{L^{20/11}(Q_T)}
  double power_law_norm = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the log-log fit
  std::size_t points = 0;
  bool valid() const { return points >= 2; }
};

// Least-squares line through (log x, log y), skipping non-positive pairs.
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct StudyReport {
  StudyParameter vary = StudyParameter::N;
  std::size_t reference = 0;
  std::vector<StudyLevel> levels;
  RateFit rate_u;          // diff_u against the parameter value
  RateFit power_law_rate;  // power_law_norm against 1/N
  // Distances to the next finer level never grow toward the reference
  // (10% noise allowance).
  bool monotone = true;
  bool all_completed() const;
  std::string csv() const;
  std::string summary() const;
};

// Levels run concurrently, capped by worker_threads().
StudyReport run_study(const StudyConfig& config);

// NLC2_THREADS if set and positive, else the hardware concurrency.
unsigned worker_threads();

struct ContinuationOptions {
  double eps0 = 0.0;
  double r_monitor = 0.0;
  std::size_t bridge_steps = 10;
  std::size_t max_window_steps = 5000;
  std::size_t max_segments = 16;
  std::size_t sample_stride = 10;
  double drop_fraction = 0.25;     // required KP drop per event, in units of eps0^2
  double total_tolerance = 0.05;   // |total change| / initial total per event
};

struct ConcentrationEvent {
  ConcentrationReport onset;
  double peak_value = 0.0;
  EnergyRecord before;  // last unflagged state
  EnergyRecord after;   // end of the bridging window
  double kp_drop = 0.0;
  double heat_rise = 0.0;
  double total_change = 0.0;
  std::size_t window_steps = 0;
  bool closed = true;  // false if t_end arrived inside the window
};

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t steps = 0;
};

struct ContinuationReport {
  std::vector<Segment> segments;
  std::vector<ConcentrationEvent> events;
  std::vector<EnergyRecord> energy;  // every sample_stride steps and at event bounds
  EnergyRecord initial;
  State final_state;
  bool reached_t_end = false;
  // Every closed event dropped KP by >= drop_fraction eps0^2 with the heat
  // rising to match, total conserved within total_tolerance.
  bool bookkeeping_ok = true;
  std::size_t flags() const { return events.size(); }
};

// Requires constrained mode. Initial data that are already flagged open
// the first window at t0. Throws InconclusiveSegmentError when a flag
// does not clear within max_window_steps.
ContinuationReport continuation_run(const State& initial, const RunConfig& config,
                                     const ContinuationOptions& options);
ContinuationReport continuation_run(const RunConfig& config, const ContinuationOptions& options);

}  // namespace nlc2
