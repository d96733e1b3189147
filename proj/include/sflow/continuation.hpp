#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sflow/attractors.hpp"
#include "sflow/regulator.hpp"

namespace sflow {

enum class FamilyKind { fixed_ray, cycle_family, trivial_rest };
const char* to_string(FamilyKind k);

// Tabulated functions of the limit-cycle continuation family.
struct CycleTables {
  double period = 0;
  double mean = 0;  // <F_r>
  double truncation = 0;  // L, length of the truncated improper integral
  PeriodicCurve orbit;    // Y_p(s)
  PeriodicSeries f_r;     // F_r(Y_p(s))
  PeriodicSeries psi_periodic;  // psi(s) - mean * s
  PeriodicSeries phi_diag;      // phi(s, s)
};

class ContinuationFamily {
public:
  FamilyKind kind = FamilyKind::trivial_rest;
  double t_b = 0;
  double alpha = 0;

  // Pre-blowup ray (fixed-point blowup); empty when unknown.
  std::optional<Vec> y_star;
  double f_r_star = 0;

  // fixed_ray
  Vec direction;
  double radial_coefficient = 0;  // (1 - alpha) F_r(y'*)

  // cycle_family
  std::shared_ptr<const CycleTables> cycle;

  // Functions of the cycle family. J(s) = int_0^s F_r(Y_p).
  double J(double s) const;
  double psi(double s) const;
  double psi_inverse(double xi, double tol = 1e-14) const;
  double phi_diag(double s) const;
  Vec x_p(double s) const;
  double zeta_period() const;  // T <F_r>

  // Direct truncated-quadrature phi(s1, s2), independent of the tables.
  double phi_quadrature(double s1, double s2) const;

  // x(t) for t < t_b along the blowup ray (requires y_star).
  Vec pre_blowup(double t) const;
};

ContinuationFamily fixed_point_solutions(const Vec& y_star, double f_r, const Vec* y_star_prime,
                                         double f_r_prime, double t_b, double alpha);

struct FamilyOptions {
  int n_psi = 128;          // psi table size over one period
  double truncation_digits = 10;
  int panels_per_period = 16;
};

ContinuationFamily build_cycle_family(const AttractorInfo& cycle, const SingularField& field,
                                      double t_b, double tol = 1e-12,
                                      const FamilyOptions& opts = {});

Vec eval_family(const ContinuationFamily& fam, double t, double zeta);

// Max over the grid of |dx/dt - f(x)| / |f(x)| with a five-point derivative.
double residual_check(const std::function<Vec(double)>& solution, const SingularField& field,
                      const std::vector<double>& t_grid, double t_b);
double residual_check(const ContinuationFamily& fam, const SingularField& field,
                      const std::vector<double>& t_grid, double zeta);

std::vector<double> geometric_sequence(double T, double mean_fr, double chi, int n_lo, int n_hi);

// ---- sweeps ----

struct BlendSpec {
  enum class Kind { polynomial_blend, preset1d } kind = Kind::polynomial_blend;
  Vec g0;
  Preset1d preset = Preset1d::expel_right;
  RegularizedField make(const SingularField& base, double nu) const;
};

struct RegularizedRun {
  Trajectory trajectory;  // accepted steps of all phases
  std::vector<double> t_grid;
  std::vector<Vec> x_grid;  // values at the requested grid (as far as reached)
  int ball_crossings = 0;
  bool ok = true;
  std::string error;
};

// Integrates x' = f^nu(x), restarting at every crossing of |x| = nu.
RegularizedRun simulate_regularized(const RegularizedField& rf, const Vec& x0, double t0,
                                    double t1, const std::vector<double>& t_grid,
                                    const IntegrationOptions& opts);

enum class SweepVerdictKind {
  trivial_zero,
  converged_to_fixed_ray,
  converged_to_cycle_family,
  diverging_phases,
  undetermined
};
const char* to_string(SweepVerdictKind k);

struct PhaseFit {
  double zeta = 0;
  double distance = 0;       // sup over the window, absolute
  double uncertainty = 0;
};

// Best zeta for samples x(t_i), t_i > t_b, by a grid scan plus golden refinement.
PhaseFit fit_phase(const ContinuationFamily& fam, const std::vector<double>& t,
                   const std::vector<Vec>& x, int n_grid = 720);

struct PowerFit {
  double C = 0, q = 0, r2 = 0;
};
PowerFit fit_power_law(const std::vector<double>& nu, const std::vector<double>& v);

struct SweepOptions {
  IntegrationOptions integration = default_integration();
  double window_lo = 0.1;  // window [t_b + lo, t_b + hi] for post-blowup metrics
  double window_hi = 1.0;
  int window_points = 91;
  std::optional<double> t_b;  // override
  double chi = 0;
  bool geometric = false;     // nu_list is a geometric subsequence
  int n_seeds = 16;
  int threads = 0;            // 0: hardware concurrency capped by SINGULAR_FLOW_THREADS
  double r2_min = 0.99;

  static IntegrationOptions default_integration() {
    IntegrationOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-15;
    o.r_floor = 0;
    return o;
  }
};

struct SweepReport {
  std::vector<double> nu_values;
  double chi = 0;
  double t_b = 0;
  std::vector<double> t_grid;
  std::vector<RegularizedRun> runs;
  std::vector<std::vector<double>> pairwise_sup_distances;  // full grid
  std::vector<std::vector<double>> pre_blowup_distances;   // t < t_b part of the grid
  std::vector<double> window_t;
  std::vector<double> sup_abs;          // sup |x^nu| over the window
  std::optional<PowerFit> trivial_fit;
  std::optional<Vec> ray_direction;
  std::vector<double> ray_distance;     // sup |x^nu - ray| over the window
  std::optional<PowerFit> ray_fit;      // ray_distance against nu
  std::vector<PhaseFit> phases;         // per nu on cycle sweeps
  std::vector<double> cycle_distance;   // sup over the window of dist(y, cycle)
  std::optional<PhaseFit> matched_zeta;
  std::optional<ContinuationFamily> family;
  SweepVerdictKind verdict = SweepVerdictKind::undetermined;
  std::string verdict_detail;
};

SweepReport inviscid_sweep(const SingularField& field, const BlendSpec& blend, const Vec& x0,
                           double t0, const std::vector<double>& t_grid,
                           const std::vector<double>& nu_list, const SweepOptions& opts = {});

// Runs fn(i) for i < n on up to `threads` workers (see SweepOptions::threads).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);
int default_threads();

// t_b of the ideal problem from x0: closed form on a fixed ray, else renormalized quadrature.
std::optional<double> ideal_blowup_time(const SingularField& field, const Vec& x0, double t0);

}  // namespace sflow
