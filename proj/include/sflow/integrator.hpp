#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sflow/types.hpp"

namespace sflow {

enum class TrajectoryStatus { completed, hit_radius_floor, hit_event, step_failure };
const char* to_string(TrajectoryStatus s);

struct BlowupEstimate {
  double t_b = 0;
  double exponent = 0;
  double residual = 0;  // RMS residual of the r^(1-alpha) fit
  int n_used = 0;
};

struct Sample {
  double t;
  Vec x;
  Vec dx;  // rhs at (t, x); used for Hermite dense output
};

struct Trajectory {
  std::vector<Sample> samples;
  TrajectoryStatus status = TrajectoryStatus::completed;
  std::optional<BlowupEstimate> t_b_estimate;
  std::string message;
  // Values at IntegrationOptions::sample_times that were reached, in order.
  std::vector<double> sample_t;
  std::vector<Vec> sample_x;

  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().x.size()); }
  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
  const Vec& final_state() const { return samples.back().x; }
  // Cubic Hermite interpolation between stored samples.
  Vec at(double t) const;
};

struct IntegrationOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0;  // 0: automatic
  double r_floor = 1e-10;   // stop when |x| drops below this (0 disables)
  double horizon = std::numeric_limits<double>::infinity();
  long max_steps = 2'000'000;
  // Times at which the state is computed exactly by sub-steps (sorted).
  std::vector<double> sample_times;
  // Applied to every accepted state (e.g. sphere re-projection).
  std::function<void(Vec&)> project;
  // Record every accepted step in Trajectory::samples (the end points always are).
  bool record_steps = true;
  // Checked after each accepted step; returning true ends the run (status completed).
  std::function<bool(double, const Vec&)> stop;
};

enum class Direction { upward, downward };

struct Event {
  std::function<double(double, const Vec&)> g;
  Direction direction = Direction::upward;
  double scale = 1.0;  // location tolerance is 1e-12 * scale
};

struct EventResult {
  double t_event;
  Vec x_event;
  Trajectory trajectory;
};

Trajectory integrate(const Rhs& rhs, const Vec& x0, double t0, double t1,
                     const IntegrationOptions& opts = {});

// Integrates until g crosses zero in the requested direction, within
// opts.horizon of t0. The crossing must not be active at t0 (EventDirection).
EventResult integrate_to_event(const Rhs& rhs, const Vec& x0, double t0, const Event& event,
                               const IntegrationOptions& opts = {});

// Lower-level driver: integrates to t1 or the first crossing, whichever
// comes first, without raising when no crossing happens.
struct SegmentResult {
  Trajectory trajectory;
  bool event_hit = false;
};
SegmentResult integrate_segment(const Rhs& rhs, const Vec& x0, double t0, double t1,
                                const IntegrationOptions& opts, const Event* event);

// One Dormand-Prince step of size h from (t, x) with f = rhs(t, x). Used as
// the exact continuous extension for events, sample times and quadratures.
Vec dp5_step(const Rhs& rhs, double t, const Vec& x, const Vec& f, double h);

BlowupEstimate estimate_blowup_time(const Trajectory& traj, double alpha);

void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(const std::string& path, const Trajectory& traj);

}  // namespace sflow
