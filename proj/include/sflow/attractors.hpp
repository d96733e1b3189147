#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sflow/periodic.hpp"
#include "sflow/regulator.hpp"
#include "sflow/renorm.hpp"

namespace sflow {

enum class AttractorKind { fixed_point, limit_cycle };
enum class RadialLabel { focusing, defocusing, degenerate };
const char* to_string(AttractorKind k);
const char* to_string(RadialLabel l);

struct AttractorInfo {
  AttractorKind kind = AttractorKind::fixed_point;
  Vec point;               // fixed point, or the cycle's s = 0 anchor
  std::vector<Vec> orbit;  // cycle samples at s_j = j T / N
  double period = 0;
  std::vector<double> exponents;  // tangent eigenvalue real parts, or {-lambda} / {+lambda}
  double mean_radial = 0;
  RadialLabel label = RadialLabel::degenerate;
  bool stable = false;
  // Cycle diagnostics.
  double closure = 0;          // |y_p(T) - y_p(0)|
  double mean_radial_alt = 0;  // Simpson estimate of <F_r>

  // Distance from y to the attractor set.
  double distance(const Vec& y) const;
  // Trigonometric interpolant of the orbit (limit cycles only).
  PeriodicCurve curve() const;
};

RadialLabel label_for(double mean_radial, double delta = 1e-6);

struct FixedPointOptions {
  int max_iter = 60;
  double tol = 1e-13;
  double merge_distance = 1e-6;
  std::uint64_t seed = 1;
};

std::vector<AttractorInfo> find_fixed_points(const SingularField& field, int n_seeds,
                                             const FixedPointOptions& opts = {});
// Newton refinement from one seed; empty if it does not converge.
std::optional<AttractorInfo> refine_fixed_point(const SingularField& field, const Vec& seed,
                                                const FixedPointOptions& opts = {});

struct CycleOptions {
  double s_transient = 30;
  double s_budget = 2000;
  double return_tol = 1e-8;
  int n_table = 256;
  bool backward = false;  // integrate -F_s to reach repelling cycles
  double fixed_point_tol = 1e-9;
  IntegrationOptions integration = default_integration();

  static IntegrationOptions default_integration() {
    IntegrationOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    o.max_step = 0.1;
    o.r_floor = 0;
    return o;
  }
};

AttractorInfo find_limit_cycle(const SingularField& field, const Vec& y0,
                               const CycleOptions& opts = {});

// Re-tabulates the cycle so that s = 0 is the orbit point closest to y.
AttractorInfo reanchor_cycle(const AttractorInfo& cycle, const Vec& y);

enum class EscapeOutcome { expelled, trapped, undetermined };
const char* to_string(EscapeOutcome o);

struct EscapeOptions {
  double tau_budget = 1e3;
  int min_revisits = 3;
  int max_revisits = 50;
  double confirm_window = 50;  // s-units; extended to 5 periods for cycles
  double delta = 1e-6;
  IntegrationOptions integration = default_integration();
  RenormOptions renorm;

  static IntegrationOptions default_integration() {
    IntegrationOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-14;
    o.r_floor = 0;
    return o;
  }
};

struct EscapeResult {
  EscapeOutcome outcome = EscapeOutcome::undetermined;
  double tau_ent = 0;
  double tau_esc = 0;
  Vec x_esc;
  Vec y_esc;
  double r_bound = 0;
  int revisits = 0;
  std::optional<AttractorInfo> attractor;
  std::string certificate;
  // Rescaled path: inner phases in X, outer phases reconstructed from (Y, Z).
  Trajectory path;
};

// Rescaled problem at nu = 1 started from X(tau_ent) = y_ent, with
// tau_ent = -1 / (F_r(y_ent) (alpha - 1)).
EscapeResult rescaled_escape(const SingularField& field, const RegularizedField& rf,
                             const Vec& y_ent, const EscapeOptions& opts = {});

enum class DefocusingCheck { satisfied, violated, inconclusive };
const char* to_string(DefocusingCheck c);

DefocusingCheck verify_defocusing_condition(const SingularField& field,
                                            const AttractorInfo& attractor);

struct Catalog {
  std::vector<AttractorInfo> fixed_points;
  std::vector<AttractorInfo> cycles;
};

struct CatalogOptions {
  int n_seeds = 16;
  std::uint64_t seed = 1;
  CycleOptions cycle;
};

// Fixed points plus attracting and repelling cycles reached from the seeds.
Catalog build_catalog(const SingularField& field, const CatalogOptions& opts = {});

}  // namespace sflow
