#include "sflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "sflow/error.hpp"

namespace sflow {

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::hit_radius_floor: return "hit_radius_floor";
    case TrajectoryStatus::hit_event: return "hit_event";
    case TrajectoryStatus::step_failure: return "step_failure";
  }
  return "completed";
}

Vec Trajectory::at(double t) const {
  if (samples.empty() || t < samples.front().t || t > samples.back().t)
    throw Error(ErrorCode::OutOfRange, "t outside trajectory");
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double v, const Sample& s) { return v < s.t; });
  if (it == samples.end()) return samples.back().x;
  if (it == samples.begin()) return samples.front().x;
  const Sample& b = *it;
  const Sample& a = *(it - 1);
  const double h = b.t - a.t;
  const double u = (t - a.t) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return h00 * a.x + h10 * h * a.dx + h01 * b.x + h11 * h * b.dx;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepOut {
  Vec x;
  Vec f;  // rhs at the new point (FSAL)
  double err = 0;
};

class Stepper {
public:
  Stepper(const Rhs& rhs, const IntegrationOptions& o) : rhs_(rhs), o_(o) {}

  // One explicit step of size h; err is the scaled RMS error estimate.
  StepOut step(double t, const Vec& x, const Vec& k1, double h) const {
    const Vec k2 = rhs_(t + c2 * h, x + h * a21 * k1);
    const Vec k3 = rhs_(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs_(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs_(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 =
        rhs_(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    StepOut out;
    out.x = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    out.f = rhs_(t + h, out.x);
    const Vec e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.f);
    double acc = 0;
    for (int i = 0; i < e.size(); ++i) {
      const double sc = o_.atol + o_.rtol * std::max(std::abs(x[i]), std::abs(out.x[i]));
      acc += (e[i] / sc) * (e[i] / sc);
    }
    out.err = std::sqrt(acc / std::max<Eigen::Index>(1, e.size()));
    return out;
  }

  // State at t + h computed with a single exact sub-step from (t, x).
  Vec substep(double t, const Vec& x, const Vec& f, double h) const {
    if (h == 0) return x;
    Vec y = step(t, x, f, h).x;
    if (o_.project) o_.project(y);
    return y;
  }

  double initial_step(double t, const Vec& x, const Vec& f, double span) const {
    if (o_.initial_step > 0) return o_.initial_step;
    auto norm = [&](const Vec& v) {
      double acc = 0;
      for (int i = 0; i < v.size(); ++i) {
        const double sc = o_.atol + o_.rtol * std::abs(x[i]);
        acc += (v[i] / sc) * (v[i] / sc);
      }
      return std::sqrt(acc / std::max<Eigen::Index>(1, v.size()));
    };
    const double d0 = norm(x), d1 = norm(f);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    double h1;
    try {
      const Vec f1 = rhs_(t + h0, x + h0 * f);
      const double d2 = norm(f1 - f) / h0;
      const double m = std::max(d1, d2);
      h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    } catch (const Error&) {
      h1 = h0 * 1e-3;
    }
    return std::min({100 * h0, h1, span, o_.max_step});
  }

private:
  const Rhs& rhs_;
  const IntegrationOptions& o_;
};

// True when the chord from a to b passes much closer to the origin than
// either end point: the step jumped over the singularity.
bool passes_origin(const Vec& a, const Vec& b) {
  const Vec d = b - a;
  const double dd = d.squaredNorm();
  if (dd == 0) return false;
  const double u = -a.dot(d) / dd;
  if (u <= 0 || u >= 1) return false;
  const double closest = (a + u * d).norm();
  return closest < 0.5 * std::min(a.norm(), b.norm());
}

bool crossed(Direction d, double g_prev, double g_new) {
  return d == Direction::upward ? (g_prev < 0 && g_new >= 0) : (g_prev > 0 && g_new <= 0);
}

bool post_side(Direction d, double g) { return d == Direction::upward ? g >= 0 : g <= 0; }

}  // namespace

SegmentResult integrate_segment(const Rhs& rhs, const Vec& x0, double t0, double t1,
                                const IntegrationOptions& opts, const Event* event) {
  if (!(opts.rtol > 0) || !(opts.atol > 0))
    throw Error(ErrorCode::InvalidArgument, "rtol and atol must be > 0");
  if (!(opts.r_floor >= 0)) throw Error(ErrorCode::InvalidArgument, "r_floor must be >= 0");
  if (!(t1 >= t0)) throw Error(ErrorCode::InvalidArgument, "t1 must be >= t0");
  t1 = std::min(t1, t0 + opts.horizon);

  SegmentResult res;
  Trajectory& tr = res.trajectory;
  Stepper st(rhs, opts);

  double t = t0;
  Vec x = x0;
  if (opts.project) opts.project(x);
  Vec f = rhs(t, x);
  tr.samples.push_back({t, x, f});

  const auto& times = opts.sample_times;
  std::size_t next = std::lower_bound(times.begin(), times.end(), t0) - times.begin();
  while (next < times.size() && times[next] == t0) {
    tr.sample_t.push_back(t0);
    tr.sample_x.push_back(x);
    ++next;
  }
  double g_prev = event ? event->g(t, x) : 0.0;

  if (t1 == t0) return res;

  double h = st.initial_step(t, x, f, t1 - t0);
  long steps = 0;
  auto finish = [&](TrajectoryStatus s, const std::string& msg = {}) {
    tr.status = s;
    tr.message = msg;
    if (tr.samples.back().t != t) tr.samples.push_back({t, x, f});
  };

  while (t < t1) {
    if (++steps > opts.max_steps) {
      finish(TrajectoryStatus::step_failure, "step limit reached");
      return res;
    }
    const double hmin = 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    h = std::min(h, opts.max_step);
    bool last = false;
    if (h >= t1 - t) {
      h = t1 - t;
      last = true;
    }
    bool rejected = false;
    StepOut out;
    for (;;) {
      bool ok = true;
      try {
        out = st.step(t, x, f, h);
        ok = std::isfinite(out.err) && out.x.allFinite() && out.f.allFinite();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OriginEvaluation) throw;
        ok = false;
      }
      if (ok && out.err <= 1.0 && opts.r_floor > 0 && passes_origin(x, out.x)) ok = false;
      if (ok && out.err <= 1.0) break;
      rejected = true;
      last = false;
      h *= ok ? std::max(0.2, 0.9 * std::pow(out.err, -0.2)) : 0.25;
      if (h < hmin) {
        finish(TrajectoryStatus::step_failure, "step size underflow");
        return res;
      }
    }
    const double t_new = last ? t1 : t + h;
    Vec x_new = out.x;
    Vec f_new = out.f;
    if (opts.project) {
      opts.project(x_new);
      f_new = rhs(t_new, x_new);
    }

    double t_stop = t_new;
    bool hit = false;
    if (event) {
      double g_new = event->g(t_new, x_new);
      if (crossed(event->direction, g_prev, g_new)) {
        const double tol = 1e-12 * event->scale;
        double lo = 0, hi = 1;
        Vec x_hi = x_new;
        double g_hi = g_new;
        for (int it = 0; it < 200 && std::abs(g_hi) > tol; ++it) {
          if ((hi - lo) * h <= 4 * std::numeric_limits<double>::epsilon() * std::abs(t) + 1e-300)
            break;
          const double mid = 0.5 * (lo + hi);
          const Vec xm = st.substep(t, x, f, mid * h);
          const double gm = event->g(t + mid * h, xm);
          if (post_side(event->direction, gm)) {
            hi = mid;
            x_hi = xm;
            g_hi = gm;
          } else {
            lo = mid;
          }
        }
        hit = true;
        t_stop = hi == 1 ? t_new : t + hi * h;
        x_new = x_hi;
        f_new = rhs(t_stop, x_new);
        g_new = g_hi;
      }
      g_prev = g_new;
    }

    while (next < times.size() && times[next] <= t_stop) {
      tr.sample_t.push_back(times[next]);
      tr.sample_x.push_back(times[next] == t_stop ? x_new : st.substep(t, x, f, times[next] - t));
      ++next;
    }

    t = t_stop;
    x = std::move(x_new);
    f = std::move(f_new);
    if (opts.record_steps || hit || t >= t1) tr.samples.push_back({t, x, f});

    if (hit) {
      tr.status = TrajectoryStatus::hit_event;
      res.event_hit = true;
      return res;
    }
    if (opts.r_floor > 0 && x.norm() < opts.r_floor) {
      finish(TrajectoryStatus::hit_radius_floor);
      return res;
    }
    if (opts.stop && opts.stop(t, x)) {
      finish(TrajectoryStatus::completed, "stop condition");
      return res;
    }
    double fac = out.err == 0 ? 5.0 : 0.9 * std::pow(out.err, -0.2);
    fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
    h *= fac;
  }
  finish(TrajectoryStatus::completed);
  return res;
}

Vec dp5_step(const Rhs& rhs, double t, const Vec& x, const Vec& f, double h) {
  IntegrationOptions o;
  return Stepper(rhs, o).step(t, x, f, h).x;
}

Trajectory integrate(const Rhs& rhs, const Vec& x0, double t0, double t1,
                     const IntegrationOptions& opts) {
  if (!(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "t1 must be > t0");
  return integrate_segment(rhs, x0, t0, t1, opts, nullptr).trajectory;
}

EventResult integrate_to_event(const Rhs& rhs, const Vec& x0, double t0, const Event& event,
                               const IntegrationOptions& opts) {
  const double g0 = event.g(t0, x0);
  const bool armed = event.direction == Direction::upward ? g0 < 0 : g0 > 0;
  if (!armed)
    throw Error(ErrorCode::EventDirection,
                "event already on the post-crossing side at t0 (g = " + std::to_string(g0) + ")");
  const double t1 = t0 + opts.horizon;
  SegmentResult seg =
      integrate_segment(rhs, x0, t0, std::isfinite(t1) ? t1 : std::numeric_limits<double>::max(),
                        opts, &event);
  if (!seg.event_hit)
    throw Error(ErrorCode::NoEvent,
                std::string("no crossing before the integration stopped (") +
                    to_string(seg.trajectory.status) + ")");
  EventResult r{seg.trajectory.t_end(), seg.trajectory.final_state(), std::move(seg.trajectory)};
  return r;
}

BlowupEstimate estimate_blowup_time(const Trajectory& traj, double alpha) {
  const auto& s = traj.samples;
  const int n = static_cast<int>(s.size());
  int run = 1;
  for (int i = n - 1; i > 0 && s[i - 1].x.norm() > s[i].x.norm(); --i) ++run;
  if (run < 20)
    throw Error(ErrorCode::NotBlowingUp,
                "radius decreases over only " + std::to_string(run) + " tail samples");
  // Fit only the last two decades of r: earlier points still carry the
  // angular transient and bias the extrapolation.
  const double r_last = s[n - 1].x.norm();
  int m = 0;
  while (m < run && s[n - 1 - m].x.norm() <= 100 * r_last) ++m;
  m = std::clamp(m, std::min(8, run), run);
  const int first = n - m;
  const double p = 1.0 - alpha;
  // u = r^(1-alpha) is linear in t for the self-similar regime: u = B (t_b - t).
  double tm = 0, um = 0;
  for (int i = first; i < n; ++i) {
    tm += s[i].t;
    um += std::pow(s[i].x.norm(), p);
  }
  tm /= m;
  um /= m;
  double stt = 0, stu = 0;
  for (int i = first; i < n; ++i) {
    const double dt = s[i].t - tm;
    stt += dt * dt;
    stu += dt * (std::pow(s[i].x.norm(), p) - um);
  }
  const double slope = stu / stt;
  if (!(slope < 0)) throw Error(ErrorCode::NotBlowingUp, "r^(1-alpha) is not decreasing");
  BlowupEstimate est;
  est.t_b = tm - um / slope;
  est.n_used = m;
  double rss = 0;
  for (int i = first; i < n; ++i) {
    const double r = std::pow(s[i].x.norm(), p) - (um + slope * (s[i].t - tm));
    rss += r * r;
  }
  est.residual = std::sqrt(rss / m);
  // exponent of r against (t_b - t), over a wider window so that the
  // uncertainty in t_b does not dominate the last few logarithms
  std::vector<double> lx, ly;
  for (int i = n - std::max(m, std::max(std::min(20, run), run / 2)); i < n; ++i) {
    const double dt = est.t_b - s[i].t;
    if (dt > 0 && s[i].x.norm() > 0) {
      lx.push_back(std::log(dt));
      ly.push_back(std::log(s[i].x.norm()));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    est.exponent = sxy / sxx;
  } else {
    est.exponent = std::numeric_limits<double>::quiet_NaN();
  }
  return est;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  const int d = traj.dim();
  os << "t";
  for (int i = 1; i <= d; ++i) os << ",x" << i;
  os << "\n";
  char buf[40];
  for (const auto& s : traj.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf;
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.x[i]);
      os << "," << buf;
    }
    os << "\n";
  }
}

void write_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  write_csv(f, traj);
}

}  // namespace sflow
