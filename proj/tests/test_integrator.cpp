#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sflow/field.hpp"
#include "sflow/integrator.hpp"

using namespace sflow;

namespace {
Rhs ideal(const SingularField& f) {
  return [f](double, const Vec& x) { return eval_field(f, x); };
}
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
double power1d_exact(double x0, double t) {
  return x0 * std::pow(1 + (2.0 / 3) * std::pow(std::abs(x0), -2.0 / 3) * t, 1.5);
}
}  // namespace

TEST_CASE("power1d closed form") {
  const auto p = builtin("power1d", 1.0 / 3);
  const Trajectory tr = integrate(ideal(p), Vec::Constant(1, 1.0), 0, 1);
  CHECK(tr.status == TrajectoryStatus::completed);
  CHECK(tr.t_end() == 1.0);
  const double exact = std::pow(5.0 / 3, 1.5);
  CHECK(std::abs(tr.final_state()[0] - exact) <= 1e-8 * exact);
  CHECK(exact == doctest::Approx(2.151657).epsilon(1e-6));
}

TEST_CASE("error decreases with the tolerance") {
  const auto p = builtin("power1d", 1.0 / 3);
  const double exact = power1d_exact(1.0, 1.0);
  double prev = -1;
  for (double tol = 1e-8; tol >= 1e-12; tol /= 10) {
    IntegrationOptions o;
    o.rtol = tol;
    o.atol = tol * 1e-3;
    const double err = std::abs(integrate(ideal(p), Vec::Constant(1, 1.0), 0, 1, o).final_state()[0] - exact);
    if (prev > 0 && prev > 1e-12) CHECK(err * 4 <= prev);
    prev = err;
  }
}

TEST_CASE("zero field gives a constant trajectory") {
  Rhs zero = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  const Trajectory tr = integrate(zero, v2(0.3, -2), 0, 10);
  CHECK(tr.status == TrajectoryStatus::completed);
  for (const auto& s : tr.samples) CHECK((s.x - v2(0.3, -2)).norm() == 0.0);
}

TEST_CASE("saddle2d reaches the radius floor before the blowup time") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const Trajectory tr = integrate(ideal(s), v2(-1, 0), 0, 3);
  CHECK(tr.status == TrajectoryStatus::hit_radius_floor);
  CHECK(tr.t_end() < 1.5 + 1e-9);
  CHECK(tr.final_state().norm() < 1e-10);
  const auto est = estimate_blowup_time(tr, 1.0 / 3);
  CHECK(std::abs(est.t_b - 1.5) <= 1e-6);
  CHECK(est.exponent == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("sphere3d blowup time from the south pole") {
  const auto s = builtin("sphere3d", 1.0 / 3);
  Vec x0(3);
  x0 << 0, 0, -1;
  const Trajectory tr = integrate(ideal(s), x0, 0, 10);
  CHECK(tr.status == TrajectoryStatus::hit_radius_floor);
  CHECK(estimate_blowup_time(tr, 1.0 / 3).t_b == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("blowup fit on an exact self-similar trajectory") {
  Trajectory tr;
  const double tb = 2.75, a = 0.25;
  for (int i = 0; i < 60; ++i) {
    const double t = tb - std::pow(0.8, i);
    const double r = std::pow((1 - a) * 0.7 * (tb - t), 1 / (1 - a));
    tr.samples.push_back({t, Vec::Constant(1, r), Vec::Zero(1)});
  }
  const auto est = estimate_blowup_time(tr, a);
  CHECK(std::abs(est.t_b - tb) <= 1e-10);
  CHECK(est.exponent == doctest::Approx(1 / (1 - a)).epsilon(1e-8));
}

TEST_CASE("blowup fit rejects growing trajectories") {
  const auto p = builtin("power1d", 1.0 / 3);
  const Trajectory tr = integrate(ideal(p), Vec::Constant(1, 1.0), 0, 1);
  CHECK_THROWS_AS(estimate_blowup_time(tr, 1.0 / 3), Error);
}

TEST_CASE("event location at the nu ball") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const double nu = 0.1;
  Event ev{[nu](double, const Vec& x) { return x.norm() - nu; }, Direction::downward, nu};
  const EventResult r = integrate_to_event(ideal(s), v2(-1, 0), 0, ev);
  const double expected = 1.5 - 1.5 * std::pow(nu, 2.0 / 3);
  CHECK(r.t_event == doctest::Approx(expected).epsilon(1e-9));
  CHECK(r.t_event == doctest::Approx(1.176835).epsilon(1e-6));
  CHECK(std::abs(r.x_event.norm() - nu) <= 1e-12 * nu);
  CHECK(r.x_event.norm() <= nu);
  CHECK(r.trajectory.status == TrajectoryStatus::hit_event);

  // re-running from the located point is a precondition violation
  try {
    integrate_to_event(ideal(s), r.x_event, r.t_event, ev);
    FAIL("expected EventDirection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EventDirection);
  }
}

TEST_CASE("missing events are reported") {
  const auto p = builtin("power1d", 1.0 / 3);
  Event ev{[](double, const Vec& x) { return x[0] - 100; }, Direction::upward, 1};
  IntegrationOptions o;
  o.horizon = 1;
  try {
    integrate_to_event(ideal(p), Vec::Constant(1, 1.0), 0, ev, o);
    FAIL("expected NoEvent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoEvent);
  }
}

TEST_CASE("sample times are exact sub-steps") {
  const auto p = builtin("power1d", 1.0 / 3);
  IntegrationOptions o;
  o.rtol = 1e-11;
  o.atol = 1e-14;
  for (int i = 0; i <= 20; ++i) o.sample_times.push_back(0.05 * i);
  const Trajectory tr = integrate(ideal(p), Vec::Constant(1, 1.0), 0, 1, o);
  REQUIRE(tr.sample_t.size() == 21);
  for (std::size_t i = 0; i < tr.sample_t.size(); ++i)
    CHECK(tr.sample_x[i][0] == doctest::Approx(power1d_exact(1, tr.sample_t[i])).epsilon(1e-10));
  // Hermite dense output is accurate between steps as well
  CHECK(tr.at(0.3333)[0] == doctest::Approx(power1d_exact(1, 0.3333)).epsilon(1e-7));
  CHECK_THROWS_AS(tr.at(1.5), Error);
}

TEST_CASE("determinism and CSV export") {
  const auto s = builtin("spiral2d", 1.0 / 3);
  const Trajectory a = integrate(ideal(s), v2(0.2, 0.1), 0, 2);
  const Trajectory b = integrate(ideal(s), v2(0.2, 0.1), 0, 2);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK((a.samples[i].x - b.samples[i].x).norm() == 0.0);
    if (i) CHECK(a.samples[i].t > a.samples[i - 1].t);
  }
  std::ostringstream os;
  write_csv(os, a);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x1,x2");
  std::getline(is, line);
  CHECK(line == "0,0.20000000000000001,0.10000000000000001");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(a.samples.size()));
}

TEST_CASE("invalid options") {
  const auto p = builtin("power1d", 1.0 / 3);
  IntegrationOptions o;
  o.rtol = 0;
  CHECK_THROWS_AS(integrate(ideal(p), Vec::Constant(1, 1.0), 0, 1, o), Error);
  CHECK_THROWS_AS(integrate(ideal(p), Vec::Constant(1, 1.0), 1, 0), Error);
}
