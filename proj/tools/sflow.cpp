#include <CLI11.hpp>

#include <iostream>

#include "sflow/commands.hpp"
#include "sflow/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Singular ODE flows: simulation, blowup classification and continuation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> settings;
  std::string outdir;
  std::string figure;
  sflow::CommandOptions opts;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", settings, "override one setting, e.g. --set alpha=0.25");
    sub->add_option("-o,--outdir", outdir, "output directory (overrides outputs.dir)");
    sub->add_flag("-q,--quiet", opts.quiet, "suppress progress messages");
    sub->add_option("--tol-scale", opts.tol_scale, "scale factor for integrator tolerances");
  };
  auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
  auto* cls = app.add_subcommand("classify", "attractor catalog and blowup verdict");
  auto* swp = app.add_subcommand("sweep", "inviscid-limit sweep over nu");
  auto* rep = app.add_subcommand("reproduce", "write the data behind a figure");
  for (auto* s : {sim, cls, swp, rep}) common(s);
  rep->add_option("figure", figure, "fig1, fig3, fig3b, fig6, fig8n or figTriv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    sflow::RunConfig cfg = config_path.empty() ? sflow::RunConfig{} : sflow::load_config(config_path);
    for (const auto& s : settings) sflow::apply_setting(cfg, s);
    if (!outdir.empty()) opts.outdir = outdir;
    if (*sim) return sflow::cmd_simulate(cfg, opts);
    if (*cls) return sflow::cmd_classify(cfg, opts);
    if (*swp) return sflow::cmd_sweep(cfg, opts);
    return sflow::cmd_reproduce(figure, cfg, opts);
  } catch (const sflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const auto c = e.code();
    return c == sflow::ErrorCode::ConfigError || c == sflow::ErrorCode::UnknownFigure ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
