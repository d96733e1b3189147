#include <doctest.h>

#include "sflow/config.hpp"
#include "sflow/error.hpp"

using namespace sflow;

TEST_CASE("parse a full configuration") {
  const auto c = parse_config(R"(
# sphere sweep
field = sphere3d
alpha = 0.3333333333333333
x0 = [0, 0, -1]
t0 = 0
t1 = 4
seed = 7
integrator.rtol = 1e-10
integrator.max_step = 0.05
regularization.kind = polynomial_blend
regularization.g0 = [0, 0.1, 1]
nu_sequence.T = 6.283185307179586
nu_sequence.mean_fr = 0.25
nu_sequence.chi = 0.785
nu_sequence.n_range = [1, 5]
sweep.window = [0.1, 1]
outputs.dir = "runs/sphere"
)");
  CHECK(c.field == "sphere3d");
  CHECK(c.x0 == std::vector<double>{0, 0, -1});
  CHECK(c.seed == 7);
  CHECK(c.integrator.rtol == 1e-10);
  CHECK(c.integrator.max_step == 0.05);
  CHECK(c.regularization.g0 == std::vector<double>{0, 0.1, 1});
  REQUIRE(c.nu_sequence);
  CHECK(c.nu_sequence->chi == 0.785);
  CHECK(c.outdir == "runs/sphere");
}

TEST_CASE("emit and parse round trip") {
  RunConfig c;
  c.field = "spiral2d";
  c.alpha = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.x0 = {1.0 / 3, -2e-7};
  c.nu = {0.1, 0.05, 0.025};
  c.regularization.kind = "polynomial_blend";
  c.regularization.g0 = {1, -2};
  c.outdir = "out dir/with space";
  const RunConfig back = parse_config(emit_config(c));
  CHECK(back == c);
  CHECK(emit_config(back) == emit_config(c));
  RunConfig d;
  d.nu_sequence = RunConfig::NuSequence{6.28, 0.25, 0, {2, 4}};
  CHECK(parse_config(emit_config(d)) == d);
}

TEST_CASE("validation and syntax errors") {
  auto code = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code("alpha = 1.5") == ErrorCode::ConfigError);
  CHECK(code("alpha = inf") == ErrorCode::ConfigError);
  CHECK(code("t1 = -1") == ErrorCode::ConfigError);
  CHECK(code("nu = [0.1, -0.2]") == ErrorCode::ConfigError);
  CHECK(code("unknown.key = 3") == ErrorCode::ConfigError);
  CHECK(code("alpha 0.3") == ErrorCode::ConfigError);
  CHECK(code("x0 = [1, 2") == ErrorCode::ConfigError);
  CHECK(code("regularization.kind = viscous") == ErrorCode::ConfigError);
  CHECK(code("regularization.sigma = 2") == ErrorCode::ConfigError);
  CHECK(code("nu_sequence.n_range = [1.5, 3]") == ErrorCode::ConfigError);
}

TEST_CASE("single settings") {
  RunConfig c;
  apply_setting(c, "alpha = 0.25");
  apply_setting(c, "x0=[2,3]");
  CHECK(c.alpha == 0.25);
  CHECK(c.x0 == std::vector<double>{2, 3});
  CHECK_THROWS_AS(apply_setting(c, "nope = 1"), Error);
}
