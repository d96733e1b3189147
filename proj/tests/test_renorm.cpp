#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sflow/renorm.hpp"

using namespace sflow;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
}  // namespace

TEST_CASE("fixed-point run of saddle2d") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const auto rt = renorm_integrate(s, v2(-1, 0), 0, 30);
  for (const auto& r : rt.samples) {
    CHECK((r.y - v2(-1, 0)).norm() < 1e-14);
    CHECK(r.z == doctest::Approx(-r.s).epsilon(1e-12));
    CHECK(r.t == doctest::Approx(1.5 * (1 - std::exp(-2 * r.s / 3))).epsilon(1e-10));
  }
  CHECK(physical_time(rt, 0) == 0.0);
  for (double s0 : {0.37, 2.2, 7.77, 19.5, 29.99})
    CHECK(std::abs(physical_time(rt, s0) - 1.5 * (1 - std::exp(-2 * s0 / 3))) < 1e-5);
  CHECK(physical_time(rt, 30) < 1.5);
  CHECK(1.5 - physical_time(rt, 30) < 1e-8);
  CHECK_THROWS_AS(physical_time(rt, 31), Error);
  const auto av = radial_averages(rt, 10);
  CHECK(av.lower == doctest::Approx(-1));
  CHECK(av.upper == doctest::Approx(-1));
  CHECK_THROWS_AS(radial_averages(rt, 20), Error);
}

TEST_CASE("spiral2d average is exactly one") {
  const auto s = builtin("spiral2d", 1.0 / 3);
  const auto rt = renorm_integrate(s, v2(0, 1), 0, 40);
  const auto av = radial_averages(rt, 20);
  CHECK(av.lower == doctest::Approx(1).epsilon(1e-12));
  CHECK(av.upper == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("sphere3d on the cycle grows at rate 1/4") {
  const auto s = builtin("sphere3d", 1.0 / 3);
  const Vec y0 = v3(std::sqrt(3.0) / 2, 0, 0.5);
  const auto rt = renorm_integrate(s, y0, 0.3, 40);
  for (const auto& r : rt.samples) CHECK(r.z == doctest::Approx(0.3 + r.s / 4).epsilon(1e-10));
  // from off the cycle the average approaches 1/4 as well
  const auto rt2 = renorm_integrate(s, unit(v3(1, 0, 0.05)), 0, 4000);
  const auto av = radial_averages(rt2, 2000);
  CHECK(std::abs(av.lower - 0.25) < 1e-3);
  CHECK(std::abs(av.upper - 0.25) < 1e-3);
}

TEST_CASE("degenerate fixed point keeps z constant") {
  // rotation only: F_r = 0 everywhere
  SingularField rot("rotation", 2, 0.5, [](const Vec& y) { return v2(-y[1], y[0]); });
  const auto rt = renorm_integrate(rot, v2(1, 0), 1.25, 10);
  for (const auto& r : rt.samples) CHECK(r.z == doctest::Approx(1.25).epsilon(1e-14));
  const auto v = classify_blowup(rot, v2(1, 0), 0);
  CHECK(v.kind == BlowupVerdictKind::undetermined);
}

TEST_CASE("invariants along runs of every built-in field") {
  std::mt19937_64 rng(17);
  for (const auto& name : builtin_names()) {
    const auto f = builtin(name, 1.0 / 3);
    for (int k = 0; k < 5; ++k) {
      const Vec y0 = random_unit(f.dim(), rng);
      const auto rt = renorm_integrate(f, y0, 0, 25);
      double sphere = 0;
      for (std::size_t i = 0; i < rt.samples.size(); ++i) {
        sphere = std::max(sphere, std::abs(rt.samples[i].y.norm() - 1));
        if (i) {
          CHECK(rt.samples[i].s > rt.samples[i - 1].s);
          CHECK(rt.samples[i].t > rt.samples[i - 1].t);
        }
      }
      CHECK(sphere <= 1e-9);
      CHECK(z_quadrature_defect(rt) <= 1e-8);
    }
  }
}

TEST_CASE("blowup classification on saddle2d") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const auto v = classify_blowup(s, v2(-1, 0), 0);
  REQUIRE(v.kind == BlowupVerdictKind::blowup);
  CHECK(std::abs(*v.t_b - 1.5) < 1e-9);
  CHECK(classify_blowup(s, v2(1, 0), 0).kind == BlowupVerdictKind::escape_to_infinity);
  CHECK(classify_blowup(s, unit(v2(-0.3, 0.8)), 0).kind == BlowupVerdictKind::blowup);
  CHECK(classify_blowup(s, unit(v2(0.3, -0.8)), 0).kind == BlowupVerdictKind::escape_to_infinity);
}

TEST_CASE("blowup time agrees with the power fit of a direct integration") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const Vec x0 = v2(-0.7, 0.5);
  const auto v = classify_blowup(s, unit(x0), std::log(x0.norm()));
  REQUIRE(v.kind == BlowupVerdictKind::blowup);
  IntegrationOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-15;
  o.r_floor = 1e-9;
  const Trajectory tr =
      integrate([&](double, const Vec& x) { return eval_field(s, x); }, x0, 0, 10, o);
  REQUIRE(tr.status == TrajectoryStatus::hit_radius_floor);
  const auto est = estimate_blowup_time(tr, 1.0 / 3);
  CHECK(std::abs(est.t_b - *v.t_b) <= 1e-5 * *v.t_b);
}

TEST_CASE("reconstruction") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const auto rt = renorm_integrate(s, v2(-1, 0), 0, 20);
  const Trajectory tr = reconstruct(rt);
  for (const auto& smp : tr.samples) {
    const double r = std::pow((2.0 / 3) * (1.5 - smp.t), 1.5);
    CHECK(smp.x.norm() == doctest::Approx(r).epsilon(1e-9));
  }
  // constant y and z give a constant x
  SingularField still("still", 2, 0.3, [](const Vec&) { return Vec(Vec::Zero(2)); });
  const Trajectory c = reconstruct(renorm_integrate(still, v2(0, 1), 0.5, 5));
  for (const auto& smp : c.samples) CHECK((smp.x - std::exp(0.5) * v2(0, 1)).norm() < 1e-15);
}

TEST_CASE("CSV export of renormalized runs") {
  const auto s = builtin("spiral2d", 1.0 / 3);
  const auto rt = renorm_integrate(s, v2(1, 0), 0, 1);
  std::ostringstream os;
  write_csv(os, rt);
  CHECK(os.str().rfind("s,y1,y2,z,t\n0,1,0,0,0\n", 0) == 0);
}
