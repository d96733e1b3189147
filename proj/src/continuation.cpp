#include "sflow/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace sflow {

const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::fixed_ray: return "fixed_ray";
    case FamilyKind::cycle_family: return "cycle_family";
    case FamilyKind::trivial_rest: return "trivial_rest";
  }
  return "trivial_rest";
}

const char* to_string(SweepVerdictKind k) {
  switch (k) {
    case SweepVerdictKind::trivial_zero: return "trivial_zero";
    case SweepVerdictKind::converged_to_fixed_ray: return "converged_to_fixed_ray";
    case SweepVerdictKind::converged_to_cycle_family: return "converged_to_cycle_family";
    case SweepVerdictKind::diverging_phases: return "diverging_phases";
    case SweepVerdictKind::undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

// 10-point Gauss-Legendre on [-1, 1].
constexpr double kGx[10] = {-0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
                            -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
                            0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
                            0.9739065285171717};
constexpr double kGw[10] = {0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
                            0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
                            0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
                            0.0666713443086881};

const CycleTables& tables(const ContinuationFamily& f) {
  if (f.kind != FamilyKind::cycle_family || !f.cycle)
    throw Error(ErrorCode::InvalidArgument, "not a cycle family");
  return *f.cycle;
}

// ln of int_{-L}^0 exp((1-alpha)(J(s1+u) - J(s1))) du.
double log_lambda(const ContinuationFamily& f, double s1, int panels_per_period) {
  const CycleTables& c = tables(f);
  const double p = 1.0 - f.alpha;
  const double width = c.period / panels_per_period;
  const int panels = static_cast<int>(std::ceil(c.truncation / width - 1e-9));
  const double j1 = f.J(s1);
  double acc = 0;
  for (int k = 0; k < panels; ++k) {
    const double a = -(k + 1) * width, b = -k * width;
    double part = 0;
    for (int i = 0; i < 10; ++i) {
      const double u = 0.5 * (a + b) + 0.5 * (b - a) * kGx[i];
      part += kGw[i] * std::exp(p * (f.J(s1 + u) - j1));
    }
    acc += 0.5 * (b - a) * part;
  }
  return std::log(acc);
}

}  // namespace

double ContinuationFamily::J(double s) const {
  const CycleTables& c = tables(*this);
  return c.mean * s + c.f_r.integral_periodic_part(s);
}

double ContinuationFamily::psi(double s) const {
  const CycleTables& c = tables(*this);
  return c.mean * s + c.psi_periodic(s);
}

double ContinuationFamily::phi_diag(double s) const { return tables(*this).phi_diag(s); }

double ContinuationFamily::zeta_period() const {
  const CycleTables& c = tables(*this);
  return c.period * c.mean;
}

double ContinuationFamily::psi_inverse(double xi, double tol) const {
  const CycleTables& c = tables(*this);
  const double m = c.mean;
  const double pmin = c.psi_periodic.min_sampled(), pmax = c.psi_periodic.max_sampled();
  const double margin = 0.05 * (pmax - pmin) + 1e-9;
  double lo = (xi - pmax - margin) / m, hi = (xi - pmin + margin) / m;
  auto g = [&](double s) { return psi(s) - xi; };
  while (g(lo) > 0) lo -= (hi - lo);
  while (g(hi) < 0) hi += (hi - lo);
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double v = g(s);
    if (v > 0) hi = s; else lo = s;
    const double dv = m + c.psi_periodic.derivative(s);
    double next = s - v / dv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - s);
    s = next;
    if (step <= tol * std::max(1.0, std::abs(s))) break;
  }
  return s;
}

Vec ContinuationFamily::x_p(double s) const {
  const CycleTables& c = tables(*this);
  return std::exp(-c.phi_diag(s)) * unit(c.orbit(s));
}

double ContinuationFamily::phi_quadrature(double s1, double s2) const {
  // phi(s1, s2) = -I(s1, s2) + ln(Lambda(s1)) / (1 - alpha), I(s1, s2) = J(s2) - J(s1)
  return -(J(s2) - J(s1)) + log_lambda(*this, s1, 16) / (1.0 - alpha);
}

Vec ContinuationFamily::pre_blowup(double t) const {
  if (!y_star) throw Error(ErrorCode::InvalidArgument, "no pre-blowup ray");
  if (t > t_b) throw Error(ErrorCode::OutOfDomain, "t > t_b");
  const double r = std::pow((alpha - 1.0) * f_r_star * (t_b - t), 1.0 / (1.0 - alpha));
  return r * *y_star;
}

ContinuationFamily fixed_point_solutions(const Vec& y_star, double f_r, const Vec* y_star_prime,
                                         double f_r_prime, double t_b, double alpha) {
  if (!(f_r < 0)) throw Error(ErrorCode::SignError, "F_r(y*) must be negative");
  if (!(alpha < 1)) throw Error(ErrorCode::InvalidArgument, "alpha must be < 1");
  ContinuationFamily f;
  f.t_b = t_b;
  f.alpha = alpha;
  f.y_star = unit(y_star);
  f.f_r_star = f_r;
  if (y_star_prime) {
    if (!(f_r_prime > 0)) throw Error(ErrorCode::SignError, "F_r(y'*) must be positive");
    f.kind = FamilyKind::fixed_ray;
    f.direction = unit(*y_star_prime);
    f.radial_coefficient = (1.0 - alpha) * f_r_prime;
  } else {
    f.kind = FamilyKind::trivial_rest;
    f.direction = Vec::Zero(y_star.size());
  }
  return f;
}

ContinuationFamily build_cycle_family(const AttractorInfo& cycle, const SingularField& field,
                                      double t_b, double tol, const FamilyOptions& opts) {
  if (cycle.kind != AttractorKind::limit_cycle)
    throw Error(ErrorCode::InvalidArgument, "a limit cycle is required");
  const double a = field.alpha();
  const int N = static_cast<int>(cycle.orbit.size());
  std::vector<double> fr(N);
  for (int j = 0; j < N; ++j) fr[j] = radial_part(field, cycle.orbit[j]);
  auto tab = std::make_shared<CycleTables>();
  tab->period = cycle.period;
  tab->orbit = PeriodicCurve(cycle.orbit, cycle.period);
  tab->f_r = PeriodicSeries(fr, cycle.period);
  tab->mean = tab->f_r.mean();
  if (!(tab->mean > 1e-6)) throw Error(ErrorCode::NonPositiveMean, "<F_r> must be positive");

  // Oscillation of J(s) - <F_r> s bounds the integrand of the improper integral.
  double pmin = 0, pmax = 0;
  for (int j = 0; j < 4 * N; ++j) {
    const double v = tab->f_r.integral_periodic_part(j * cycle.period / (4 * N));
    pmin = std::min(pmin, v);
    pmax = std::max(pmax, v);
  }
  const double beta = (1.0 - a) * tab->mean;
  const double lnC = 2.0 * (1.0 - a) * (pmax - pmin);
  tab->truncation = std::ceil((opts.truncation_digits * std::log(10.0) + lnC) / beta);

  ContinuationFamily f;
  f.kind = FamilyKind::cycle_family;
  f.t_b = t_b;
  f.alpha = a;
  f.cycle = tab;

  const int M = opts.n_psi;
  std::vector<double> psi_p(M), phid(M);
  for (int j = 0; j < M; ++j) {
    const double s = j * cycle.period / M;
    const double ll = log_lambda(f, s, opts.panels_per_period) / (1.0 - a);
    phid[j] = ll;
    psi_p[j] = f.J(s) + ll - tab->mean * s;
  }
  tab->psi_periodic = PeriodicSeries(psi_p, cycle.period);
  tab->phi_diag = PeriodicSeries(phid, cycle.period);
  (void)tol;
  return f;
}

Vec eval_family(const ContinuationFamily& fam, double t, double zeta) {
  if (!(t > fam.t_b)) throw Error(ErrorCode::OutOfDomain, "t must exceed t_b");
  const double dt = t - fam.t_b;
  const double e = 1.0 / (1.0 - fam.alpha);
  switch (fam.kind) {
    case FamilyKind::trivial_rest: return Vec::Zero(fam.direction.size());
    case FamilyKind::fixed_ray:
      return std::pow(fam.radial_coefficient * dt, e) * fam.direction;
    case FamilyKind::cycle_family: {
      const double s = fam.psi_inverse(e * std::log(dt) + zeta);
      return std::pow(dt, e) * fam.x_p(s);
    }
  }
  return {};
}

double residual_check(const std::function<Vec(double)>& x, const SingularField& field,
                      const std::vector<double>& t_grid, double t_b) {
  double worst = 0;
  for (double t : t_grid) {
    if (!(t > t_b)) throw Error(ErrorCode::OutOfDomain, "grid point at or before t_b");
    const double h = 1e-3 * (t - t_b);
    const Vec d = (-x(t + 2 * h) + 8 * x(t + h) - 8 * x(t - h) + x(t - 2 * h)) / (12 * h);
    const Vec f = eval_field(field, x(t));
    worst = std::max(worst, (d - f).norm() / f.norm());
  }
  return worst;
}

double residual_check(const ContinuationFamily& fam, const SingularField& field,
                      const std::vector<double>& t_grid, double zeta) {
  return residual_check([&](double t) { return eval_family(fam, t, zeta); }, field, t_grid,
                        fam.t_b);
}

std::vector<double> geometric_sequence(double T, double mean_fr, double chi, int n_lo, int n_hi) {
  if (!(T > 0) || !(mean_fr > 0))
    throw Error(ErrorCode::InvalidArgument, "T and <F_r> must be positive");
  std::vector<double> v;
  for (int n = n_lo; n <= n_hi; ++n) v.push_back(std::exp(-T * mean_fr * n + chi));
  return v;
}

RegularizedField BlendSpec::make(const SingularField& base, double nu) const {
  if (kind == Kind::preset1d) return make_preset1d(base, preset, nu);
  return make_polynomial_blend(base, g0, nu);
}

RegularizedRun simulate_regularized(const RegularizedField& rf, const Vec& x0, double t0,
                                    double t1, const std::vector<double>& t_grid,
                                    const IntegrationOptions& opts) {
  RegularizedRun run;
  run.t_grid = t_grid;
  const double nu = rf.nu();
  const Rhs rhs = [&rf](double, const Vec& x) { return eval_regularized(rf, x); };
  IntegrationOptions io = opts;
  io.r_floor = 0;
  Vec x = x0;
  double t = t0;
  bool inside = x.norm() <= nu;
  std::size_t next = 0;
  try {
    while (t < t1) {
      io.sample_times.assign(t_grid.begin() + next, t_grid.end());
      Event ev{[nu](double, const Vec& v) { return v.norm() - nu; },
               inside ? Direction::upward : Direction::downward, nu};
      SegmentResult seg = integrate_segment(rhs, x, t, t1, io, &ev);
      const auto& s = seg.trajectory.samples;
      for (std::size_t i = run.trajectory.samples.empty() ? 0 : 1; i < s.size(); ++i)
        run.trajectory.samples.push_back(s[i]);
      for (std::size_t i = 0; i < seg.trajectory.sample_t.size(); ++i) {
        run.x_grid.push_back(seg.trajectory.sample_x[i]);
        ++next;
      }
      t = seg.trajectory.t_end();
      x = seg.trajectory.final_state();
      if (seg.event_hit) {
        ++run.ball_crossings;
        inside = !inside;
        continue;
      }
      if (seg.trajectory.status != TrajectoryStatus::completed) {
        run.ok = false;
        run.error = std::string("integration stopped: ") + to_string(seg.trajectory.status) +
                    " " + seg.trajectory.message;
      }
      break;
    }
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
  }
  run.trajectory.status = run.ok ? TrajectoryStatus::completed : TrajectoryStatus::step_failure;
  return run;
}

PhaseFit fit_phase(const ContinuationFamily& fam, const std::vector<double>& t,
                   const std::vector<Vec>& x, int n_grid) {
  const double P = fam.zeta_period();
  auto dist = [&](double z) {
    double m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, (x[i] - eval_family(fam, t[i], z)).norm());
    return m;
  };
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_grid; ++k) {
    const double d = dist(k * P / n_grid);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  const double h = P / n_grid;
  double a = (best - 1) * h, b = (best + 1) * h;
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = dist(c), fd = dist(d);
  while (b - a > 1e-9 * P) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - g * (b - a); fc = dist(c);
    } else {
      a = c; c = d; fc = fd; d = a + g * (b - a); fd = dist(d);
    }
  }
  PhaseFit pf;
  pf.zeta = std::fmod(std::fmod(0.5 * (a + b), P) + P, P);
  pf.distance = dist(pf.zeta);
  pf.uncertainty = b - a;
  return pf;
}

PowerFit fit_power_law(const std::vector<double>& nu, const std::vector<double>& v) {
  const int n = static_cast<int>(nu.size());
  if (n < 2 || static_cast<int>(v.size()) != n)
    throw Error(ErrorCode::InvalidArgument, "power fit needs >= 2 points");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    if (!(v[i] > 0)) throw Error(ErrorCode::InvalidArgument, "power fit needs positive values");
    mx += std::log(nu[i]);
    my += std::log(v[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double dx = std::log(nu[i]) - mx, dy = std::log(v[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  PowerFit f;
  f.q = sxy / sxx;
  f.C = std::exp(my - f.q * mx);
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

int default_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SINGULAR_FLOW_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = default_threads();
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::optional<double> ideal_blowup_time(const SingularField& field, const Vec& x0, double t0) {
  const double r0 = x0.norm();
  if (r0 == 0) return std::nullopt;
  const Vec y0 = x0 / r0;
  const auto dec = decompose(field, y0);
  const double a = field.alpha();
  if (dec.f_s.norm() <= 1e-12) {
    if (dec.f_r < 0) return t0 + std::pow(r0, 1.0 - a) / ((a - 1.0) * dec.f_r);
    return std::nullopt;
  }
  ClassifyOptions co;
  co.renorm.t0 = t0;
  const BlowupVerdict v = classify_blowup(field, y0, std::log(r0), co);
  if (v.kind == BlowupVerdictKind::blowup) return v.t_b;
  return std::nullopt;
}

SweepReport inviscid_sweep(const SingularField& field, const BlendSpec& blend, const Vec& x0,
                           double t0, const std::vector<double>& t_grid,
                           const std::vector<double>& nu_list, const SweepOptions& opts) {
  if (nu_list.empty()) throw Error(ErrorCode::InvalidArgument, "empty nu list");
  for (std::size_t i = 0; i < nu_list.size(); ++i)
    if (!(nu_list[i] > 0) || (i > 0 && !(nu_list[i] < nu_list[i - 1])))
      throw Error(ErrorCode::InvalidArgument, "nu list must be positive and decreasing");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.empty())
    throw Error(ErrorCode::InvalidArgument, "t grid must be sorted and non-empty");

  const double a = field.alpha();
  const double e = 1.0 / (1.0 - a);
  SweepReport rep;
  rep.nu_values = nu_list;
  rep.chi = opts.chi;
  rep.t_grid = t_grid;
  const std::optional<double> tb = opts.t_b ? opts.t_b : ideal_blowup_time(field, x0, t0);
  rep.t_b = tb.value_or(std::numeric_limits<double>::quiet_NaN());

  // Integration grid: user grid plus the post-blowup window.
  std::vector<double> all = t_grid;
  if (tb) {
    for (int i = 0; i < opts.window_points; ++i) {
      const double w = *tb + opts.window_lo +
                       (opts.window_hi - opts.window_lo) * i / std::max(1, opts.window_points - 1);
      rep.window_t.push_back(w);
      all.push_back(w);
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  const double t_end = all.back();

  const int n = static_cast<int>(nu_list.size());
  std::vector<RegularizedRun> full(n);
  parallel_for(n, opts.threads, [&](int i) {
    try {
      const RegularizedField rf = blend.make(field, nu_list[i]);
      full[i] = simulate_regularized(rf, x0, t0, t_end, all, opts.integration);
    } catch (const std::exception& ex) {
      full[i].ok = false;
      full[i].error = ex.what();
    }
  });

  auto lookup = [&](const RegularizedRun& r, double t) -> const Vec* {
    const auto it = std::lower_bound(all.begin(), all.end(), t);
    const std::size_t k = it - all.begin();
    return k < r.x_grid.size() ? &r.x_grid[k] : nullptr;
  };

  std::vector<std::vector<Vec>> win(n);
  rep.runs.resize(n);
  for (int i = 0; i < n; ++i) {
    RegularizedRun& out = rep.runs[i];
    out.trajectory = std::move(full[i].trajectory);
    out.ball_crossings = full[i].ball_crossings;
    out.ok = full[i].ok;
    out.error = full[i].error;
    out.t_grid = t_grid;
    for (double t : t_grid)
      if (const Vec* v = lookup(full[i], t)) out.x_grid.push_back(*v);
    for (double t : rep.window_t)
      if (const Vec* v = lookup(full[i], t)) win[i].push_back(*v);
  }

  rep.pairwise_sup_distances.assign(n, std::vector<double>(n, 0.0));
  rep.pre_blowup_distances.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double all_d = 0, pre_d = 0;
      const auto& xi = rep.runs[i].x_grid;
      const auto& xj = rep.runs[j].x_grid;
      const std::size_t m = std::min(xi.size(), xj.size());
      for (std::size_t k = 0; k < m; ++k) {
        const double d = (xi[k] - xj[k]).norm();
        all_d = std::max(all_d, d);
        if (tb && t_grid[k] < *tb) pre_d = std::max(pre_d, d);
      }
      rep.pairwise_sup_distances[i][j] = rep.pairwise_sup_distances[j][i] = all_d;
      rep.pre_blowup_distances[i][j] = rep.pre_blowup_distances[j][i] = pre_d;
    }

  if (!tb) {
    rep.verdict = SweepVerdictKind::undetermined;
    rep.verdict_detail = "the ideal solution does not blow up";
    return rep;
  }
  std::vector<int> good;
  for (int i = 0; i < n; ++i)
    if (rep.runs[i].ok && win[i].size() == rep.window_t.size()) good.push_back(i);
  if (good.empty()) {
    rep.verdict_detail = "no regularized run reached the post-blowup window";
    return rep;
  }
  const int last = good.back();

  rep.sup_abs.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> fit_nu, fit_v;
  for (int i : good) {
    double m = 0;
    for (const Vec& v : win[i]) m = std::max(m, v.norm());
    rep.sup_abs[i] = m;
    fit_nu.push_back(nu_list[i]);
    fit_v.push_back(m);
  }
  if (fit_nu.size() >= 3 && *std::min_element(fit_v.begin(), fit_v.end()) > 0)
    rep.trivial_fit = fit_power_law(fit_nu, fit_v);

  // Candidate post-blowup rays: stable defocusing fixed points.
  std::vector<AttractorInfo> rays;
  for (const auto& fp : find_fixed_points(field, opts.n_seeds))
    if (fp.stable && fp.mean_radial > 1e-6) rays.push_back(fp);
  double ray_rel = std::numeric_limits<double>::infinity();
  bool ray_monotone = false;
  bool ray_vanishing = false;
  if (!rays.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rays) {
      double d = 0;
      for (std::size_t k = 0; k < rep.window_t.size(); ++k) {
        const double rad = std::pow((1 - a) * r.mean_radial * (rep.window_t[k] - *tb), e);
        d = std::max(d, (win[last][k] - rad * r.point).norm());
      }
      if (d < best) {
        best = d;
        rep.ray_direction = r.point;
      }
    }
    const double fr = radial_part(field, *rep.ray_direction);
    double ray_sup = 0;
    rep.ray_distance.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (int i : good) {
      double d = 0;
      for (std::size_t k = 0; k < rep.window_t.size(); ++k) {
        const double rad = std::pow((1 - a) * fr * (rep.window_t[k] - *tb), e);
        ray_sup = std::max(ray_sup, rad);
        d = std::max(d, (win[i][k] - rad * *rep.ray_direction).norm());
      }
      rep.ray_distance[i] = d;
    }
    ray_monotone = good.size() >= 2;
    for (std::size_t k = 1; k < good.size(); ++k)
      if (!(rep.ray_distance[good[k]] < rep.ray_distance[good[k - 1]])) ray_monotone = false;
    ray_rel = rep.ray_distance[last] / ray_sup;
    if (good.size() >= 3) {
      std::vector<double> gn, gd;
      for (int i : good) {
        gn.push_back(nu_list[i]);
        gd.push_back(rep.ray_distance[i]);
      }
      rep.ray_fit = fit_power_law(gn, gd);
      ray_vanishing = rep.ray_fit->q > 0 && rep.ray_fit->r2 > opts.r2_min;
    }
  }

  // Candidate cycle family: the stable defocusing cycle nearest the final direction.
  if (field.dim() >= 3 || (field.dim() == 2 && rays.empty())) {
    std::optional<AttractorInfo> cyc;
    const Vec y_last = unit(win[last].back());
    try {
      AttractorInfo c = find_limit_cycle(field, y_last);
      if (c.mean_radial > 1e-6) cyc = c;
    } catch (const Error&) {
    }
    if (cyc) {
      rep.family = build_cycle_family(*cyc, field, *tb);
      rep.phases.assign(n, PhaseFit{});
      rep.cycle_distance.assign(n, std::numeric_limits<double>::quiet_NaN());
      parallel_for(static_cast<int>(good.size()), opts.threads, [&](int k) {
        const int i = good[k];
        rep.phases[i] = fit_phase(*rep.family, rep.window_t, win[i]);
      });
      for (int i : good) {
        double d = 0;
        for (const Vec& v : win[i]) d = std::max(d, cyc->distance(unit(v)));
        rep.cycle_distance[i] = d;
      }
    }
  }

  std::ostringstream det;
  if (rep.trivial_fit && rep.trivial_fit->q > 0 && rep.trivial_fit->r2 > opts.r2_min) {
    rep.verdict = SweepVerdictKind::trivial_zero;
    det << "sup|x| ~ " << rep.trivial_fit->C << " nu^" << rep.trivial_fit->q
        << " (R^2 = " << rep.trivial_fit->r2 << ")";
  } else if (rep.ray_direction && ray_monotone && (ray_rel < 0.1 || ray_vanishing)) {
    rep.verdict = SweepVerdictKind::converged_to_fixed_ray;
    det << "ray distance " << rep.ray_distance[last] << " at nu = " << nu_list[last]
        << ", decreasing in nu";
    if (rep.ray_fit)
      det << " like " << rep.ray_fit->C << " nu^" << rep.ray_fit->q << " (R^2 = " << rep.ray_fit->r2
          << ")";
  } else if (rep.family) {
    double fam_sup = 0;
    for (double t : rep.window_t) fam_sup = std::max(fam_sup, std::pow(t - *tb, e));
    const PhaseFit& pl = rep.phases[last];
    double change = std::numeric_limits<double>::infinity();
    if (good.size() >= 2) {
      const double P = rep.family->zeta_period();
      double dz = std::fmod(pl.zeta - rep.phases[good[good.size() - 2]].zeta, P);
      if (dz > 0.5 * P) dz -= P;
      if (dz < -0.5 * P) dz += P;
      change = std::abs(dz);
    }
    const bool close = pl.distance < 0.1 * fam_sup * std::exp(-rep.family->phi_diag(0));
    if (close && (opts.geometric || change <= 1e-2)) {
      rep.verdict = SweepVerdictKind::converged_to_cycle_family;
      rep.matched_zeta = PhaseFit{pl.zeta, pl.distance, change};
      det << "zeta = " << pl.zeta << " (last change " << change << ", sup distance "
          << pl.distance << ")";
    } else if (close) {
      rep.verdict = SweepVerdictKind::diverging_phases;
      det << "family distance " << pl.distance << " but zeta moves by " << change;
    } else {
      det << "family distance " << pl.distance << " too large";
    }
  } else {
    det << "no reference matched";
  }
  rep.verdict_detail = det.str();
  return rep;
}

}  // namespace sflow
