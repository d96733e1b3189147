#include <doctest.h>

#include <cmath>
#include <random>

#include "sflow/regulator.hpp"

using namespace sflow;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("blend weight identities") {
  CHECK(blend_weight(0) == 0.0);
  CHECK(blend_weight(1) == 1.0);
  const double h = 1e-7;
  CHECK(std::abs((blend_weight(h) - blend_weight(0)) / h) < 1e-6);
  CHECK(std::abs((blend_weight(1) - blend_weight(1 - h)) / h) < 1e-6);
}

TEST_CASE("polynomial blend values") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const double nu = 0.05;
  const auto rf = make_polynomial_blend(s, v2(1, 1.3), nu);
  const Vec at0 = eval_regularized(rf, v2(0, 0));
  CHECK(at0[0] == doctest::Approx(std::pow(nu, 1.0 / 3) * 1.0));
  CHECK(at0[1] == doctest::Approx(std::pow(nu, 1.0 / 3) * 1.3));
  CHECK((rf.inner_map(v2(0, 0)) - v2(1, 1.3)).norm() == 0.0);

  // the ball boundary: both branches give nu^alpha F(y)
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vec y = random_unit(2, rng);
    CHECK((rf.inner_map(y) - s.sphere_map(y)).norm() <= 1e-9);
    const Vec inner = std::pow(nu, 1.0 / 3) * rf.inner_map(y);
    CHECK((inner - eval_field(s, nu * y)).norm() <= 1e-12);
  }
}

TEST_CASE("outside the ball the regularized field is the ideal field") {
  const auto s = builtin("spiral2d", 1.0 / 3);
  const auto rf = make_polynomial_blend(s, v2(0.3, -0.2), 0.1);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    const Vec x = (0.1 + k * 0.05) * random_unit(2, rng);
    if (x.norm() <= 0.1) continue;
    const Vec a = eval_regularized(rf, x), b = eval_field(s, x);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
  }
}

TEST_CASE("nu scaling of the inner branch") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  const auto rf = make_polynomial_blend(s, v2(1, -2), 0.02);
  const auto r1 = rf.with_nu(1.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    const Vec x = 0.02 * u(rng) * random_unit(2, rng);
    const Vec a = eval_regularized(rf, x);
    const Vec b = std::pow(0.02, 1.0 / 3) * eval_regularized(r1, x / 0.02);
    CHECK((a - b).norm() <= 1e-12 * std::max(b.norm(), 1e-300));
  }
}

TEST_CASE("1-D presets") {
  const auto p = builtin("power1d", 1.0 / 3);
  const double nu = 0.4;
  const auto er = make_preset1d(p, Preset1d::expel_right, nu);
  const auto el = make_preset1d(p, Preset1d::expel_left, nu);
  const auto tr = make_preset1d(p, Preset1d::trap, nu);
  CHECK(eval_regularized(er, Vec::Zero(1))[0] == doctest::Approx(std::pow(nu, 1.0 / 3) / 2));
  CHECK(eval_regularized(el, Vec::Zero(1))[0] == doctest::Approx(-std::pow(nu, 1.0 / 3) / 2));
  CHECK(eval_regularized(tr, Vec::Zero(1))[0] == doctest::Approx(std::pow(nu, 1.0 / 3) / 6));
  // the trap background vanishes at X = 1/8 and the blended field changes sign inside
  const double a = eval_regularized(tr, Vec::Constant(1, 0.9 * nu))[0];
  CHECK(a > 0);
  CHECK(eval_regularized(tr, Vec::Constant(1, 0.3 * nu))[0] < 0);
  CHECK(er.kind() == BlendKind::preset_expel);
  CHECK(tr.kind() == BlendKind::preset_trap);
  CHECK_THROWS_AS(make_preset1d(builtin("saddle2d", 0.3), Preset1d::trap, 0.1), Error);
}

TEST_CASE("singular blend is rejected") {
  const auto s = builtin("saddle2d", -2.0);
  try {
    make_polynomial_blend(s, v2(1, 0), 0.1);
    FAIL("expected SingularBlend");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularBlend);
  }
  CHECK_NOTHROW(make_polynomial_blend(builtin("saddle2d", -1.9), v2(1, 0), 0.1));
  CHECK_THROWS_AS(make_polynomial_blend(builtin("saddle2d", 0.3), v2(1, 0), 0.0), Error);
}

TEST_CASE("smoothness check") {
  const auto s = builtin("saddle2d", 1.0 / 3);
  for (double nu : {1.0, 0.1, 1e-3}) {
    const auto rep = check_smoothness(make_polynomial_blend(s, v2(1, 1.3), nu));
    CHECK(rep.n_directions >= 200);
    CHECK(rep.value_jump <= 1e-9 * std::pow(nu, 1.0 / 3));
    CHECK(rep.jacobian_jump <= 1e-3);
    CHECK(rep.pass);
  }
  const auto p = builtin("power1d", 1.0 / 3);
  CHECK(check_smoothness(make_preset1d(p, Preset1d::trap, 0.4)).pass);
  CHECK(check_smoothness(make_preset1d(p, Preset1d::expel_left, 0.4)).pass);

  const auto broken = make_custom(s, [](const Vec&) { return Vec(Vec::Zero(2)); }, 0.1);
  const auto rep = check_smoothness(broken);
  CHECK_FALSE(rep.pass);
  // worst jump equals nu^alpha max |F| on the sphere
  double fmax = 0;
  for (const Vec& y : sphere_points(2, 256, 7)) fmax = std::max(fmax, s.sphere_map(y).norm());
  CHECK(rep.value_jump == doctest::Approx(std::pow(0.1, 1.0 / 3) * fmax).epsilon(1e-12));
}
