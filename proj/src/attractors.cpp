#include "sflow/attractors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sflow {

const char* to_string(AttractorKind k) {
  return k == AttractorKind::fixed_point ? "fixed_point" : "limit_cycle";
}
const char* to_string(RadialLabel l) {
  switch (l) {
    case RadialLabel::focusing: return "focusing";
    case RadialLabel::defocusing: return "defocusing";
    case RadialLabel::degenerate: return "degenerate";
  }
  return "degenerate";
}
const char* to_string(EscapeOutcome o) {
  switch (o) {
    case EscapeOutcome::expelled: return "expelled";
    case EscapeOutcome::trapped: return "trapped";
    case EscapeOutcome::undetermined: return "undetermined";
  }
  return "undetermined";
}
const char* to_string(DefocusingCheck c) {
  switch (c) {
    case DefocusingCheck::satisfied: return "satisfied";
    case DefocusingCheck::violated: return "violated";
    case DefocusingCheck::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

RadialLabel label_for(double m, double delta) {
  if (m < -delta) return RadialLabel::focusing;
  if (m > delta) return RadialLabel::defocusing;
  return RadialLabel::degenerate;
}

namespace {

template <class F>
double golden_min(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Parameter in [0, T) of the curve point closest to y.
double closest_parameter(const PeriodicCurve& c, int n_grid, const Vec& y) {
  const double T = c.period();
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n_grid; ++j) {
    const double d = (c(j * T / n_grid) - y).squaredNorm();
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  const double h = T / n_grid;
  const double s = golden_min([&](double u) { return (c(u) - y).squaredNorm(); },
                              (best - 1) * h, (best + 1) * h, 1e-12 * T);
  return std::fmod(std::fmod(s, T) + T, T);
}

Rhs spherical_rhs(const SingularField& field, double sign) {
  const auto F = field.raw_map();
  return [F, sign](double, const Vec& y) {
    const Vec u = y / y.norm();
    const Vec f = F(u);
    return Vec(sign * (f - f.dot(u) * u));
  };
}

void project_unit(Vec& y) { y /= y.norm(); }

}  // namespace

double AttractorInfo::distance(const Vec& y) const {
  if (kind == AttractorKind::fixed_point) return (y - point).norm();
  const PeriodicCurve c = curve();
  const double s = closest_parameter(c, 4 * static_cast<int>(orbit.size()), y);
  return (c(s) - y).norm();
}

PeriodicCurve AttractorInfo::curve() const {
  if (kind != AttractorKind::limit_cycle || orbit.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "not a tabulated limit cycle");
  return PeriodicCurve(orbit, period);
}

std::optional<AttractorInfo> refine_fixed_point(const SingularField& field, const Vec& seed,
                                                const FixedPointOptions& opts) {
  const int d = field.dim();
  Vec y = unit(seed);
  if (d == 1) {
    AttractorInfo a;
    a.point = y;
    a.mean_radial = radial_part(field, y);
    a.label = label_for(a.mean_radial);
    a.stable = true;
    return a;
  }
  auto residual = [&](const Vec& u) { return decompose(field, u).f_s.norm(); };
  double res = residual(y);
  for (int it = 0; it < opts.max_iter && res > opts.tol; ++it) {
    const auto dec = decompose(field, y);
    const Mat B = tangent_basis(y);
    const Mat L = B.transpose() * field.jacobian(y) * B -
                  dec.f_r * Mat::Identity(d - 1, d - 1);
    const Vec g = B.transpose() * dec.f_s;
    Eigen::FullPivLU<Mat> lu(L);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec step = B * lu.solve(-g);
    double lam = 1;
    bool moved = false;
    for (int k = 0; k < 30; ++k, lam *= 0.5) {
      const Vec cand = unit(y + lam * step);
      const double rc = residual(cand);
      if (rc < res) {
        y = cand;
        res = rc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(res <= std::max(opts.tol, 1e-11))) return std::nullopt;
  AttractorInfo a;
  a.kind = AttractorKind::fixed_point;
  a.point = y;
  const auto dec = decompose(field, y);
  a.mean_radial = dec.f_r;
  a.label = label_for(a.mean_radial);
  const Mat B = tangent_basis(y);
  const Mat L =
      B.transpose() * field.jacobian(y) * B - dec.f_r * Mat::Identity(d - 1, d - 1);
  Eigen::EigenSolver<Mat> es(L, false);
  for (int i = 0; i < es.eigenvalues().size(); ++i) a.exponents.push_back(es.eigenvalues()[i].real());
  std::sort(a.exponents.begin(), a.exponents.end(), std::greater<>());
  a.stable = !a.exponents.empty() && a.exponents.front() < 0;
  return a;
}

std::vector<AttractorInfo> find_fixed_points(const SingularField& field, int n_seeds,
                                             const FixedPointOptions& opts) {
  if (n_seeds < 1) throw Error(ErrorCode::InvalidArgument, "n_seeds must be >= 1");
  std::vector<AttractorInfo> out;
  for (const Vec& s : sphere_points(field.dim(), n_seeds, opts.seed)) {
    auto a = refine_fixed_point(field, s, opts);
    if (!a) continue;
    bool dup = false;
    for (const auto& b : out)
      if ((b.point - a->point).norm() < opts.merge_distance) dup = true;
    if (!dup) out.push_back(*a);
  }
  auto key = [](const Vec& p) {
    if (p.size() == 2) {
      double phi = std::atan2(p[1], p[0]);
      if (phi < -1e-12) phi += 2 * std::numbers::pi;
      return std::vector<double>{std::max(phi, 0.0)};
    }
    return std::vector<double>(p.data(), p.data() + p.size());
  };
  std::sort(out.begin(), out.end(),
            [&](const AttractorInfo& a, const AttractorInfo& b) { return key(a.point) < key(b.point); });
  return out;
}

AttractorInfo find_limit_cycle(const SingularField& field, const Vec& y0, const CycleOptions& o) {
  const int d = field.dim();
  if (d < 2) throw Error(ErrorCode::NotFound, "no cycles on S^0");
  if (std::abs(y0.norm() - 1) > 1e-9) throw Error(ErrorCode::NotUnitVector, "y0 not on sphere");
  const double sign = o.backward ? -1.0 : 1.0;
  const Rhs rhs = spherical_rhs(field, sign);
  IntegrationOptions io = o.integration;
  io.project = project_unit;
  io.r_floor = 0;
  auto fs_norm = [&](const Vec& y) { return decompose(field, unit(y)).f_s.norm(); };

  Trajectory tr = integrate(rhs, unit(y0), 0, o.s_transient, io);
  if (tr.status != TrajectoryStatus::completed) throw Error(ErrorCode::NotFound, "transient failed");
  const Vec p = unit(tr.final_state());
  if (fs_norm(p) < o.fixed_point_tol)
    throw Error(ErrorCode::NotFound, "orbit converges to a fixed point");

  const Vec n = unit(decompose(field, p).f_s);
  Event section{[&](double, const Vec& y) { return sign * n.dot(y - p); }, Direction::upward, 1.0};

  double s = o.s_transient;
  Vec q = p;
  double s_prev = s;
  Vec q_prev = p;
  double period = 0;
  bool converged = false;
  while (s - o.s_transient < o.s_budget) {
    SegmentResult seg = integrate_segment(rhs, q, s, o.s_transient + o.s_budget, io, &section);
    if (!seg.event_hit) break;
    s = seg.trajectory.t_end();
    q = unit(seg.trajectory.final_state());
    if (fs_norm(q) < o.fixed_point_tol)
      throw Error(ErrorCode::NotFound, "orbit converges to a fixed point");
    if ((q - p).norm() > 0.1 && (q - q_prev).norm() > 0.1) continue;  // other branch of the section
    const double dist = (q - q_prev).norm();
    period = s - s_prev;
    s_prev = s;
    q_prev = q;
    if (dist < o.return_tol) {
      converged = true;
      break;
    }
  }
  if (!converged || !(period > 0)) throw Error(ErrorCode::NotFound, "no recurrence within budget");

  // Tabulate one period in the integration direction, then orient forward in s.
  const int N = o.n_table;
  IntegrationOptions tio = io;
  for (int j = 0; j <= N; ++j) tio.sample_times.push_back(j * period / N);
  tio.record_steps = false;
  Trajectory tab = integrate(rhs, q, 0, period, tio);
  if (static_cast<int>(tab.sample_x.size()) != N + 1)
    throw Error(ErrorCode::NotFound, "tabulation failed");
  std::vector<Vec> pts(N + 1);
  for (int j = 0; j <= N; ++j) pts[j] = unit(tab.sample_x[o.backward ? N - j : j]);

  AttractorInfo a;
  a.kind = AttractorKind::limit_cycle;
  a.period = period;
  a.closure = (pts[N] - pts[0]).norm();
  a.orbit.assign(pts.begin(), pts.begin() + N);
  a.point = a.orbit.front();
  double trap = 0, simpson = 0, fs_max = 0;
  for (int j = 0; j <= N; ++j) {
    const auto dec = decompose(field, pts[j]);
    fs_max = std::max(fs_max, dec.f_s.norm());
    if (j < N) trap += dec.f_r;
    const double w = (j == 0 || j == N) ? 1 : (j % 2 ? 4 : 2);
    simpson += w * dec.f_r;
  }
  if (fs_max < 1e-6) throw Error(ErrorCode::NotFound, "orbit collapsed to a fixed point");
  a.mean_radial = trap / N;
  a.mean_radial_alt = simpson / (3.0 * N);
  a.label = label_for(a.mean_radial);

  // Return-map contraction along section directions transverse to the orbit.
  Mat basis(d, 0);
  {
    Mat M(d, 2);
    M.col(0) = q;
    M.col(1) = n;
    Eigen::HouseholderQR<Mat> qr(M);
    const Mat Q = qr.householderQ();
    basis = Q.rightCols(d - 2);
  }
  double worst = 0;
  bool have = false;
  const double eps = 1e-6;
  for (int k = 0; k < basis.cols(); ++k) {
    const Vec start = unit(q + eps * basis.col(k));
    const Vec nq = unit(decompose(field, q).f_s);
    Event sec2{[&](double, const Vec& y) { return sign * nq.dot(y - q); }, Direction::upward, 1.0};
    // Leave the section first so the start point does not count as a return.
    const Trajectory half = integrate(rhs, start, 0, 0.5 * period, io);
    if (half.status != TrajectoryStatus::completed) continue;
    SegmentResult seg =
        integrate_segment(rhs, half.final_state(), 0.5 * period, 3 * period, io, &sec2);
    if (!seg.event_hit) continue;
    const double ratio = (unit(seg.trajectory.final_state()) - q).norm() / eps;
    const double rate = std::log(std::max(ratio, 1e-300)) / seg.trajectory.t_end();
    if (!have || rate > worst) worst = rate;
    have = true;
  }
  if (have) {
    a.exponents.push_back(sign * worst);
    a.stable = sign * worst < 0;
  } else {
    a.stable = !o.backward;
  }
  return a;
}

AttractorInfo reanchor_cycle(const AttractorInfo& cycle, const Vec& y) {
  const PeriodicCurve c = cycle.curve();
  const int N = static_cast<int>(cycle.orbit.size());
  const double s0 = closest_parameter(c, 4 * N, y);
  AttractorInfo out = cycle;
  for (int j = 0; j < N; ++j) out.orbit[j] = unit(c(s0 + j * cycle.period / N));
  out.point = out.orbit.front();
  return out;
}

EscapeResult rescaled_escape(const SingularField& field, const RegularizedField& rf_in,
                             const Vec& y_ent, const EscapeOptions& o) {
  const RegularizedField rf = rf_in.nu() == 1.0 ? rf_in : rf_in.with_nu(1.0);
  const int d = field.dim();
  const double a = field.alpha();
  const double fr = radial_part(field, y_ent);
  if (!(fr < 0)) throw Error(ErrorCode::SignError, "entry direction must have F_r < 0");
  EscapeResult res;
  res.tau_ent = -1.0 / (fr * (a - 1.0));
  res.r_bound = 1.0;

  const Rhs inner = [&rf](double, const Vec& X) { return eval_regularized(rf, X); };
  Event exit_ball{[](double, const Vec& X) { return X.norm() - 1.0; }, Direction::upward, 1.0};
  Event reenter{[d](double, const Vec& w) { return w[d]; }, Direction::downward, 1.0};

  auto append = [&](const Trajectory& tr) {
    for (const auto& smp : tr.samples) {
      if (!res.path.samples.empty() && !(smp.t > res.path.samples.back().t)) continue;
      res.path.samples.push_back(smp);
      res.r_bound = std::max(res.r_bound, smp.x.norm());
    }
  };

  Vec X = unit(y_ent);
  double tau = res.tau_ent;
  std::ostringstream cert;
  for (;;) {
    SegmentResult seg = integrate_segment(inner, X, tau, o.tau_budget, o.integration, &exit_ball);
    append(seg.trajectory);
    if (!seg.event_hit) {
      if (seg.trajectory.status == TrajectoryStatus::completed) {
        res.outcome = EscapeOutcome::trapped;
        cert << "inside R <= 1 at tau budget " << o.tau_budget << "; R_b = " << res.r_bound
             << "; revisits = " << res.revisits;
      } else {
        cert << "inner phase stopped: " << to_string(seg.trajectory.status);
      }
      break;
    }
    const double t_exit = seg.trajectory.t_end();
    const Vec X_exit = seg.trajectory.final_state();

    RenormOptions ro = o.renorm;
    ro.t0 = t_exit;
    RenormTrajectory rt = renorm_integrate(field, unit(X_exit), std::log(X_exit.norm()), 1e-9, ro);
    double window = o.confirm_window;
    bool returned = renorm_integrate_to_event(rt, window, reenter, ro);
    std::optional<AttractorInfo> att;
    if (!returned && rt.status == RenormStatus::completed) {
      const Vec Y = rt.back().y;
      if (decompose(field, Y).f_s.norm() < 1e-6) {
        att = refine_fixed_point(field, Y);
      } else {
        try {
          att = find_limit_cycle(field, Y);
        } catch (const Error&) {
        }
      }
      if (att && att->kind == AttractorKind::limit_cycle && window < 5 * att->period) {
        window = 5 * att->period;
        returned = renorm_integrate_to_event(rt, window, reenter, ro);
      }
    }
    append(reconstruct(rt));
    if (returned) {
      ++res.revisits;
      const RenormSample& e = rt.back();
      X = std::exp(e.z) * e.y;
      tau = e.t;
      if (res.revisits >= o.max_revisits) {
        res.outcome = EscapeOutcome::trapped;
        cert << "revisited R <= 1 " << res.revisits << " times; R_b = " << res.r_bound;
        break;
      }
      if (tau >= o.tau_budget) {
        res.outcome = res.revisits >= o.min_revisits ? EscapeOutcome::trapped
                                                     : EscapeOutcome::undetermined;
        cert << "tau budget reached after " << res.revisits << " revisits; R_b = " << res.r_bound;
        break;
      }
      continue;
    }
    // No return within the window: certify escape into a defocusing attractor.
    const auto& sm = rt.samples;
    const double s_mid = rt.s_end() - 0.5 * window;
    double z_mid = sm.front().z, z_min = std::numeric_limits<double>::infinity();
    for (const auto& r : sm) {
      z_min = std::min(z_min, r.z);
      if (r.s <= s_mid) z_mid = r.z;
    }
    const bool growing = rt.back().z > z_mid && z_min >= -1e-12;
    if (att && att->mean_radial > o.delta && att->stable && growing &&
        rt.status == RenormStatus::completed) {
      res.outcome = EscapeOutcome::expelled;
      res.tau_esc = t_exit;
      res.x_esc = X_exit;
      res.y_esc = unit(X_exit);
      res.attractor = att;
      cert << "left R = 1 at tau = " << t_exit << "; spherical part reached "
           << to_string(att->kind) << " with <F_r> = " << att->mean_radial
           << "; Z grew over a window of " << window << " s-units without return";
    } else {
      cert << "left R = 1 at tau = " << t_exit << " but no defocusing attractor was confirmed";
      res.tau_esc = t_exit;
      res.x_esc = X_exit;
      res.y_esc = unit(X_exit);
    }
    break;
  }
  res.certificate = cert.str();
  return res;
}

DefocusingCheck verify_defocusing_condition(const SingularField& field, const AttractorInfo& att) {
  const double p = 1.0 - field.alpha();
  std::vector<double> fr;
  double T = 1.0;
  if (att.kind == AttractorKind::fixed_point) {
    fr.push_back(radial_part(field, att.point));
  } else {
    T = att.period;
    for (const Vec& y : att.orbit) fr.push_back(radial_part(field, y));
  }
  if (*std::min_element(fr.begin(), fr.end()) > 0) return DefocusingCheck::satisfied;

  // K(S) = int_0^S exp(-(1-alpha)(J(S) - J(S'))) dS', J' = F_r along the attractor.
  const int per = 64;
  auto K = [&](int periods) {
    const int n = periods * per;
    const double h = T / per;
    const PeriodicSeries series = fr.size() > 1 ? PeriodicSeries(fr, T) : PeriodicSeries();
    auto frs = [&](double s) { return fr.size() > 1 ? series(s) : fr[0]; };
    std::vector<double> J(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
      const double s0 = (i - 1) * h;
      J[i] = J[i - 1] + h / 6 * (frs(s0) + 4 * frs(s0 + 0.5 * h) + frs(s0 + h));
    }
    double acc = 0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      acc += w * std::exp(-p * (J[n] - J[i]));
    }
    return acc * h;
  };
  const double k10 = K(10), k20 = K(20);
  if (!std::isfinite(k20) || k20 > 1.5 * k10) return DefocusingCheck::violated;
  if (std::abs(k20 - k10) <= 1e-3 * k10) return DefocusingCheck::satisfied;
  return DefocusingCheck::inconclusive;
}

Catalog build_catalog(const SingularField& field, const CatalogOptions& opts) {
  Catalog c;
  FixedPointOptions fo;
  fo.seed = opts.seed;
  c.fixed_points = find_fixed_points(field, opts.n_seeds, fo);
  if (field.dim() < 2) return c;
  const auto seeds = sphere_points(field.dim(), opts.n_seeds, opts.seed);
  for (bool backward : {false, true}) {
    for (const Vec& s : seeds) {
      CycleOptions co = opts.cycle;
      co.backward = backward;
      bool known = false;
      for (const auto& cyc : c.cycles)
        if (cyc.distance(s) < 1e-6) known = true;
      if (known) continue;
      try {
        AttractorInfo a = find_limit_cycle(field, s, co);
        bool dup = false;
        for (const auto& cyc : c.cycles)
          if (cyc.distance(a.point) < 1e-6 && std::abs(cyc.period - a.period) < 1e-6 * a.period)
            dup = true;
        if (!dup) c.cycles.push_back(std::move(a));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound) throw;
      }
    }
  }
  std::sort(c.cycles.begin(), c.cycles.end(), [](const AttractorInfo& a, const AttractorInfo& b) {
    return a.mean_radial > b.mean_radial;
  });
  return c;
}

}  // namespace sflow
