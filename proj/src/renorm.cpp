#include "sflow/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace sflow {

const char* to_string(RenormStatus s) {
  switch (s) {
    case RenormStatus::completed: return "completed";
    case RenormStatus::overflow_guard: return "overflow_guard";
    case RenormStatus::step_failure: return "step_failure";
    case RenormStatus::hit_event: return "hit_event";
  }
  return "completed";
}

const char* to_string(BlowupVerdictKind k) {
  switch (k) {
    case BlowupVerdictKind::blowup: return "blowup";
    case BlowupVerdictKind::escape_to_infinity: return "escape_to_infinity";
    case BlowupVerdictKind::undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

// State w = (y_1..y_d, z, t).
Rhs renorm_rhs(const SingularField& field) {
  const int d = field.dim();
  const double p = 1.0 - field.alpha();
  const auto F = field.raw_map();
  return [d, p, F](double, const Vec& w) {
    const Vec y = w.head(d) / w.head(d).norm();
    const Vec f = F(y);
    const double fr = f.dot(y);
    Vec out(d + 2);
    if (d == 1)
      out.head(1).setZero();
    else
      out.head(d) = f - fr * y;
    out[d] = fr;
    out[d + 1] = std::exp(p * w[d]);
    return out;
  };
}

RenormSample to_sample(const SingularField& field, double s, const Vec& w) {
  const int d = field.dim();
  RenormSample r;
  r.s = s;
  r.y = w.head(d) / w.head(d).norm();
  r.z = w[d];
  r.t = w[d + 1];
  r.f_r = field.raw_map()(r.y).dot(r.y);
  r.dt_ds = std::exp((1.0 - field.alpha()) * r.z);
  return r;
}

Vec to_state(const RenormSample& r) {
  const int d = static_cast<int>(r.y.size());
  Vec w(d + 2);
  w.head(d) = r.y;
  w[d] = r.z;
  w[d + 1] = r.t;
  return w;
}

IntegrationOptions prepared(const SingularField& field, const RenormOptions& opts) {
  IntegrationOptions io = opts.integration;
  const int d = field.dim();
  const double p = 1.0 - field.alpha();
  const double lim = opts.overflow_exponent;
  io.r_floor = 0;
  io.project = [d](Vec& w) { w.head(d) /= w.head(d).norm(); };
  io.stop = [d, p, lim](double, const Vec& w) { return p * w[d] > lim; };
  return io;
}

bool run(RenormTrajectory& rt, double s_max, const RenormOptions& opts, const Event* event) {
  const SingularField& field = rt.field();
  const int d = field.dim();
  const RenormSample start = rt.back();
  if (!(s_max > start.s)) return false;
  const IntegrationOptions io = prepared(field, opts);
  SegmentResult seg = integrate_segment(renorm_rhs(field), to_state(start), start.s, s_max, io, event);
  const auto& smp = seg.trajectory.samples;
  for (std::size_t i = 1; i < smp.size(); ++i) {
    RenormSample r = to_sample(field, smp[i].t, smp[i].x);
    if (r.t < rt.back().t) {
      rt.status = RenormStatus::step_failure;
      return false;
    }
    rt.samples.push_back(std::move(r));
  }
  if (seg.event_hit) {
    rt.status = RenormStatus::hit_event;
  } else if (seg.trajectory.status == TrajectoryStatus::step_failure) {
    rt.status = RenormStatus::step_failure;
  } else if ((1.0 - field.alpha()) * rt.back().z > opts.overflow_exponent) {
    rt.status = RenormStatus::overflow_guard;
  } else {
    rt.status = RenormStatus::completed;
  }
  (void)d;
  return seg.event_hit;
}

}  // namespace

RenormTrajectory renorm_integrate(const SingularField& field, const Vec& y0, double z0,
                                  double s_max, const RenormOptions& opts) {
  if (y0.size() != field.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (std::abs(y0.norm() - 1.0) > 1e-9) throw Error(ErrorCode::NotUnitVector, "y0 not on sphere");
  if (!(s_max > 0)) throw Error(ErrorCode::InvalidArgument, "s_max must be > 0");
  RenormTrajectory rt(field, field.alpha());
  Vec w(field.dim() + 2);
  w.head(field.dim()) = unit(y0);
  w[field.dim()] = z0;
  w[field.dim() + 1] = opts.t0;
  rt.samples.push_back(to_sample(field, 0.0, w));
  run(rt, s_max, opts, nullptr);
  return rt;
}

void renorm_extend(RenormTrajectory& rt, double s_max, const RenormOptions& opts) {
  if (rt.status == RenormStatus::completed || rt.status == RenormStatus::hit_event)
    run(rt, s_max, opts, nullptr);
}

bool renorm_integrate_to_event(RenormTrajectory& rt, double s_max, const Event& event,
                               const RenormOptions& opts) {
  return run(rt, s_max, opts, &event);
}

double physical_time(const RenormTrajectory& rt, double s) {
  const auto& v = rt.samples;
  if (v.empty() || s < v.front().s || s > v.back().s)
    throw Error(ErrorCode::OutOfRange, "s outside the sampled range");
  auto it = std::upper_bound(v.begin(), v.end(), s,
                             [](double x, const RenormSample& r) { return x < r.s; });
  if (it == v.end()) return v.back().t;
  if (it == v.begin()) return v.front().t;
  const RenormSample& b = *it;
  const RenormSample& a = *(it - 1);
  const double h = b.s - a.s;
  const double secant = (b.t - a.t) / h;
  double m0 = a.dt_ds, m1 = b.dt_ds;
  if (secant <= 0) return a.t;
  // Fritsch-Carlson limiter keeps the cubic monotone.
  const double al = m0 / secant, be = m1 / secant;
  const double q = al * al + be * be;
  if (q > 9) {
    const double tau = 3 / std::sqrt(q);
    m0 = tau * al * secant;
    m1 = tau * be * secant;
  }
  const double u = (s - a.s) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return h00 * a.t + h10 * h * m0 + h01 * b.t + h11 * h * m1;
}

RadialAverages radial_averages(const RenormTrajectory& rt, double window,
                               std::optional<double> origin) {
  auto first = rt.samples.begin();
  if (origin)
    first = std::lower_bound(rt.samples.begin(), rt.samples.end(), *origin,
                             [](const RenormSample& r, double s) { return r.s < s; });
  if (first == rt.samples.end())
    throw Error(ErrorCode::InvalidArgument, "origin beyond the trajectory");
  const double s0 = first->s, s1 = rt.s_end();
  if (!(window > 0) || s1 - s0 < 2 * window * (1 - 1e-12))
    throw Error(ErrorCode::InvalidArgument, "trajectory shorter than twice the window");
  const double z0 = first->z;
  RadialAverages a;
  a.horizon = window;
  a.lower = std::numeric_limits<double>::infinity();
  a.upper = -std::numeric_limits<double>::infinity();
  for (auto it = rt.samples.rbegin(); it != rt.samples.rend(); ++it) {
    if (it->s < s1 - window) break;
    const double m = (it->z - z0) / (it->s - s0);
    a.lower = std::min(a.lower, m);
    a.upper = std::max(a.upper, m);
  }
  return a;
}

BlowupVerdict classify_blowup(const SingularField& field, const Vec& y0, double z0,
                              const ClassifyOptions& opts) {
  BlowupVerdict v;
  v.s_budget = opts.s_budget;
  RenormTrajectory rt = renorm_integrate(field, y0, z0, std::min(2 * opts.window, opts.s_budget),
                                         opts.renorm);
  std::optional<RadialAverages> prev;
  const double p = 1.0 - field.alpha();
  auto finish_blowup = [&](const RadialAverages& A) {
    v.kind = BlowupVerdictKind::blowup;
    const RenormSample& e = rt.back();
    // remaining integral of e^((1-alpha) z) with F_r frozen at its tail value
    const double rate = e.f_r < -opts.delta ? e.f_r : A.upper;
    v.t_b = e.t + e.dt_ds / (p * -rate);
  };
  for (double W = opts.window;; W *= 2) {
    if (2 * W > opts.s_budget * (1 + 1e-12)) break;
    renorm_extend(rt, 2 * W, opts.renorm);
    if (rt.status == RenormStatus::step_failure) break;
    if (rt.status == RenormStatus::overflow_guard) {
      const double w = std::min(W, 0.5 * (rt.s_end() - rt.s_begin()));
      if (w > 0) {
        v.averages = radial_averages(rt, w);
        if (v.averages.lower > opts.delta) v.kind = BlowupVerdictKind::escape_to_infinity;
      }
      break;
    }
    // Averages measured from s_end - W: same limit, no 1/s drift
    // from the initial transient.
    const RadialAverages A =
        radial_averages(rt, 0.4 * W, rt.s_end() - W);
    v.averages = A;
    if (prev && std::abs(A.lower - prev->lower) < opts.stabilization &&
        std::abs(A.upper - prev->upper) < opts.stabilization) {
      if (A.upper < -opts.delta)
        finish_blowup(A);
      else if (A.lower > opts.delta)
        v.kind = BlowupVerdictKind::escape_to_infinity;
      break;
    }
    prev = A;
  }
  v.s_used = rt.s_end();
  v.y_final = rt.back().y;
  return v;
}

Trajectory reconstruct(const RenormTrajectory& rt) {
  Trajectory tr;
  const double a = rt.alpha();
  for (const auto& r : rt.samples) {
    if (!tr.samples.empty() && !(r.t > tr.samples.back().t)) continue;
    const Vec x = std::exp(r.z) * r.y;
    const Vec dx = std::exp(a * r.z) * rt.field().raw_map()(r.y);
    tr.samples.push_back({r.t, x, dx});
  }
  tr.status = TrajectoryStatus::completed;
  return tr;
}

double z_quadrature_defect(const RenormTrajectory& rt) {
  static const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  const SingularField& field = rt.field();
  const int d = field.dim();
  const Rhs rhs = renorm_rhs(field);
  double total = 0;
  for (std::size_t i = 0; i + 1 < rt.samples.size(); ++i) {
    const RenormSample& a = rt.samples[i];
    const double h = rt.samples[i + 1].s - a.s;
    const Vec w = to_state(a);
    const Vec f = rhs(a.s, w);
    double acc = 0;
    for (int k = 0; k < 5; ++k) {
      const double ds = 0.5 * h * (xg[k] + 1);
      const Vec wk = dp5_step(rhs, a.s, w, f, ds);
      const Vec y = wk.head(d) / wk.head(d).norm();
      acc += wg[k] * field.raw_map()(y).dot(y);
    }
    total += 0.5 * h * acc;
  }
  return std::abs(rt.back().z - rt.samples.front().z - total);
}

void write_csv(std::ostream& os, const RenormTrajectory& rt) {
  const int d = rt.field().dim();
  os << "s";
  for (int i = 1; i <= d; ++i) os << ",y" << i;
  os << ",z,t\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (const auto& r : rt.samples) {
    put(r.s);
    for (int i = 0; i < d; ++i) {
      os << ",";
      put(r.y[i]);
    }
    os << ",";
    put(r.z);
    os << ",";
    put(r.t);
    os << "\n";
  }
}

void write_csv(const std::string& path, const RenormTrajectory& rt) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  write_csv(f, rt);
}

}  // namespace sflow
