#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sflow/config.hpp"

namespace sflow {

// Flags shared by all commands.
struct CommandOptions {
  std::optional<std::string> outdir;  // overrides outputs.dir
  bool quiet = false;
  double tol_scale = 1;  // multiplies integrator rtol and atol
};

// Exit codes: 0 success, 3 integration failure or exhausted budget. Config
// problems throw Error(ConfigError); the CLI maps them to exit code 2.
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts);
int cmd_classify(const RunConfig& cfg, const CommandOptions& opts);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts);
// Throws Error(UnknownFigure) for ids outside figure_ids().
int cmd_reproduce(const std::string& figure, const RunConfig& cfg, const CommandOptions& opts);

std::vector<std::string> figure_ids();

}  // namespace sflow
