#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sflow {

// Run configuration, read from a line-oriented `key = value` file. See README
// for the grammar.
struct RunConfig {
  std::string field = "saddle2d";
  double alpha = 1.0 / 3.0;
  std::vector<double> x0 = {-1.0, 0.0};
  double t0 = 0;
  double t1 = 3;
  std::uint64_t seed = 1;

  struct Integrator {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = 0;  // 0: unlimited
    double r_floor = 1e-10;
    bool operator==(const Integrator&) const = default;
  } integrator;

  struct Regularization {
    std::string kind = "none";  // none | polynomial_blend | preset1d
    std::vector<double> g0;
    std::string preset = "expel";  // expel | trap (preset1d)
    double sigma = 1;              // +1 or -1 for expel
    bool operator==(const Regularization&) const = default;
  } regularization;

  std::vector<double> nu;
  struct NuSequence {
    double T = 0;
    double mean_fr = 0;
    double chi = 0;
    std::vector<double> n_range = {1, 5};
    bool operator==(const NuSequence&) const = default;
  };
  std::optional<NuSequence> nu_sequence;

  struct Sweep {
    std::vector<double> window = {0.1, 1.0};
    double grid_points = 201;
    bool operator==(const Sweep&) const = default;
  } sweep;

  struct Classify {
    double n_seeds = 16;
    double window = 20;
    double s_budget = 1e5;
    bool operator==(const Classify&) const = default;
  } classify;

  std::string outdir = "out";

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Applies one `key = value` line on top of an existing config.
void apply_setting(RunConfig& cfg, const std::string& line);
std::string emit_config(const RunConfig& cfg);
// Throws ConfigError on invalid values (alpha >= 1, non-finite numbers, ...).
void validate(const RunConfig& cfg);

}  // namespace sflow
