#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sflow/field.hpp"
#include "sflow/integrator.hpp"

namespace sflow {

struct RenormSample {
  double s;
  Vec y;
  double z;
  double t;
  double f_r;  // F_r(y), kept for quadratures
  double dt_ds;
};

enum class RenormStatus { completed, overflow_guard, step_failure, hit_event };
const char* to_string(RenormStatus s);

struct RenormOptions {
  IntegrationOptions integration = default_integration();
  double t0 = 0;
  // Stop once (1 - alpha) z exceeds this, before e^((1-alpha) z) overflows.
  double overflow_exponent = 700;

  static IntegrationOptions default_integration() {
    IntegrationOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    o.max_step = 0.5;
    o.r_floor = 0;
    return o;
  }
};

class RenormTrajectory {
public:
  RenormTrajectory(SingularField field, double alpha) : field_(std::move(field)), alpha_(alpha) {}

  const SingularField& field() const { return field_; }
  double alpha() const { return alpha_; }
  std::vector<RenormSample> samples;
  RenormStatus status = RenormStatus::completed;

  double s_begin() const { return samples.front().s; }
  double s_end() const { return samples.back().s; }
  const RenormSample& back() const { return samples.back(); }

private:
  SingularField field_;
  double alpha_;
};

// Integrates dy/ds = F_s(y), dz/ds = F_r(y), dt/ds = e^((1-alpha) z) from s = 0.
RenormTrajectory renorm_integrate(const SingularField& field, const Vec& y0, double z0,
                                  double s_max, const RenormOptions& opts = {});
// Continues an existing run up to s_max.
void renorm_extend(RenormTrajectory& rt, double s_max, const RenormOptions& opts = {});

// Same system with an event on the state (y, z, t); returns true if it fired.
bool renorm_integrate_to_event(RenormTrajectory& rt, double s_max, const Event& event,
                               const RenormOptions& opts = {});

double physical_time(const RenormTrajectory& rt, double s);

struct RadialAverages {
  double lower = 0;
  double upper = 0;
  double horizon = 0;
};

// Extremes over s in [s_end - window, s_end] of (z(s) - z(s_o)) / (s - s_o).
// s_o is the first sample, or the first sample at or after `origin` when given;
// the averages must still cover twice the window from s_o.
RadialAverages radial_averages(const RenormTrajectory& rt, double window,
                               std::optional<double> origin = std::nullopt);

enum class BlowupVerdictKind { blowup, escape_to_infinity, undetermined };
const char* to_string(BlowupVerdictKind k);

struct ClassifyOptions {
  RenormOptions renorm;
  double window = 20;
  double s_budget = 1e5;
  double delta = 1e-3;
  double stabilization = 1e-4;
};

struct BlowupVerdict {
  BlowupVerdictKind kind = BlowupVerdictKind::undetermined;
  std::optional<double> t_b;
  RadialAverages averages;
  double s_budget = 0;
  double s_used = 0;
  Vec y_final;
};

BlowupVerdict classify_blowup(const SingularField& field, const Vec& y0, double z0,
                              const ClassifyOptions& opts = {});

Trajectory reconstruct(const RenormTrajectory& rt);

// |z(s_end) - z0 - quadrature of F_r|, with Gauss-Legendre on the dense output.
double z_quadrature_defect(const RenormTrajectory& rt);

void write_csv(std::ostream& os, const RenormTrajectory& rt);
void write_csv(const std::string& path, const RenormTrajectory& rt);

}  // namespace sflow
