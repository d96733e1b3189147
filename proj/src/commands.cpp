#include "sflow/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "sflow/continuation.hpp"
#include "sflow/serialize.hpp"

namespace fs = std::filesystem;

namespace sflow {

namespace {

constexpr double pi = std::numbers::pi;

struct Context {
  const RunConfig& cfg;
  const CommandOptions& opts;
  fs::path dir;

  void log(const std::string& msg) const {
    if (!opts.quiet) std::cerr << msg << '\n';
  }
};

Context make_context(const RunConfig& cfg, const CommandOptions& opts) {
  validate(cfg);
  if (!(opts.tol_scale > 0) || !std::isfinite(opts.tol_scale))
    throw Error(ErrorCode::ConfigError, "tol-scale must be positive");
  Context c{cfg, opts, fs::path(opts.outdir ? *opts.outdir : cfg.outdir)};
  fs::create_directories(c.dir);
  return c;
}

SingularField field_of(const RunConfig& cfg) {
  try {
    return builtin(cfg.field, cfg.alpha);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

Vec x0_of(const RunConfig& cfg, const SingularField& f) {
  if (static_cast<int>(cfg.x0.size()) != f.dim())
    throw Error(ErrorCode::ConfigError, "x0 has " + std::to_string(cfg.x0.size()) +
                                            " components, field " + f.name() + " needs " +
                                            std::to_string(f.dim()));
  return Eigen::Map<const Vec>(cfg.x0.data(), f.dim());
}

IntegrationOptions integration_of(const RunConfig& cfg, double tol_scale) {
  IntegrationOptions o;
  o.rtol = cfg.integrator.rtol * tol_scale;
  o.atol = cfg.integrator.atol * tol_scale;
  if (cfg.integrator.max_step > 0) o.max_step = cfg.integrator.max_step;
  o.r_floor = cfg.integrator.r_floor;
  return o;
}

std::optional<BlendSpec> blend_of(const RunConfig& cfg, const SingularField& f) {
  const auto& r = cfg.regularization;
  if (r.kind == "none") return std::nullopt;
  BlendSpec b;
  if (r.kind == "preset1d") {
    if (f.dim() != 1) throw Error(ErrorCode::ConfigError, "preset1d needs a 1-D field");
    b.kind = BlendSpec::Kind::preset1d;
    b.preset = r.preset == "trap" ? Preset1d::trap
                                  : (r.sigma > 0 ? Preset1d::expel_right : Preset1d::expel_left);
  } else {
    if (static_cast<int>(r.g0.size()) != f.dim())
      throw Error(ErrorCode::ConfigError, "regularization.g0 must have the field dimension");
    b.g0 = Eigen::Map<const Vec>(r.g0.data(), f.dim());
  }
  return b;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  v.back() = b;
  return v;
}

std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Plain CSV table; %.17g keeps the values bit-exact.
class Table {
public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void row(const std::vector<double>& r) { rows_.push_back(r); }
  void row(std::vector<double> head, const Vec& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) head.push_back(x[i]);
    rows_.push_back(std::move(head));
  }
  const std::vector<std::string>& columns() const { return columns_; }
  void write(const fs::path& p) const {
    std::ofstream os(p);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt_g(r[i], 17);
      os << '\n';
    }
  }

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

std::vector<std::string> coord_columns(std::vector<std::string> head, int d, const char* p = "x") {
  for (int i = 1; i <= d; ++i) head.push_back(p + std::to_string(i));
  return head;
}

void write_grid_csv(const fs::path& p, const std::vector<double>& t, const std::vector<Vec>& x,
                    int d) {
  Table tab(coord_columns({"t"}, d));
  for (std::size_t i = 0; i < x.size(); ++i) tab.row({t[i]}, x[i]);
  tab.write(p);
}

std::string nu_file(double nu) { return "nu_" + fmt_g(nu, 6) + ".csv"; }

std::vector<double> nu_list_of(const RunConfig& cfg) {
  if (!cfg.nu.empty()) return cfg.nu;
  if (cfg.nu_sequence) {
    const auto& s = *cfg.nu_sequence;
    return geometric_sequence(s.T, s.mean_fr, s.chi, static_cast<int>(s.n_range[0]),
                              static_cast<int>(s.n_range[1]));
  }
  throw Error(ErrorCode::ConfigError, "sweep needs nu or nu_sequence");
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const SingularField f = field_of(cfg);
  const Vec x0 = x0_of(cfg, f);
  const auto blend = blend_of(cfg, f);
  IntegrationOptions io = integration_of(cfg, opts.tol_scale);

  Trajectory tr;
  std::optional<double> t_b;
  json extra;
  if (!blend) {
    tr = integrate([&f](double, const Vec& x) { return eval_field(f, x); }, x0, cfg.t0, cfg.t1, io);
    if (tr.status == TrajectoryStatus::hit_radius_floor) {
      try {
        const auto est = estimate_blowup_time(tr, f.alpha());
        t_b = est.t_b;
        extra["blowup_fit"] = {{"t_b", est.t_b}, {"exponent", est.exponent},
                               {"residual", est.residual}, {"n_used", est.n_used}};
      } catch (const Error& e) {
        ctx.log(std::string("blowup fit failed: ") + e.what());
      }
    }
  } else {
    if (cfg.nu.empty()) throw Error(ErrorCode::ConfigError, "a regularized run needs nu");
    const double nu = cfg.nu.front();
    const RegularizedField rf = blend->make(f, nu);
    const RegularizedRun run = simulate_regularized(rf, x0, cfg.t0, cfg.t1, {}, io);
    tr = run.trajectory;
    if (!run.ok) {
      tr.status = TrajectoryStatus::step_failure;
      tr.message = run.error;
    }
    t_b = ideal_blowup_time(f, x0, cfg.t0);
    extra["nu"] = nu;
    extra["ball_crossings"] = run.ball_crossings;
  }
  if (tr.samples.empty()) {
    ctx.log("integration produced no samples");
    return 3;
  }
  write_csv((ctx.dir / "trajectory.csv").string(), tr);
  json sum = trajectory_summary(tr, t_b);
  sum["field"] = f.name();
  sum["alpha"] = f.alpha();
  for (auto& [k, v] : extra.items()) sum[k] = v;
  write_json((ctx.dir / "summary.json").string(), sum);
  ctx.log("simulate: " + std::string(to_string(tr.status)) + " at t = " + fmt_g(tr.t_end(), 10));
  return tr.status == TrajectoryStatus::step_failure ? 3 : 0;
}

int cmd_classify(const RunConfig& cfg, const CommandOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const SingularField f = field_of(cfg);
  const Vec x0 = x0_of(cfg, f);
  if (!(x0.norm() > 0)) throw Error(ErrorCode::ConfigError, "x0 must not be the origin");

  CatalogOptions co;
  co.n_seeds = static_cast<int>(cfg.classify.n_seeds);
  co.seed = cfg.seed;
  co.cycle.integration.rtol *= opts.tol_scale;
  co.cycle.integration.atol *= opts.tol_scale;
  const Catalog cat = build_catalog(f, co);
  write_json((ctx.dir / "catalog.json").string(), to_json(cat));

  ClassifyOptions vo;
  vo.window = cfg.classify.window;
  vo.s_budget = cfg.classify.s_budget;
  vo.renorm.t0 = cfg.t0;
  vo.renorm.integration.rtol *= opts.tol_scale;
  vo.renorm.integration.atol *= opts.tol_scale;
  const BlowupVerdict v = classify_blowup(f, unit(x0), std::log(x0.norm()), vo);
  json vj = to_json(v);
  vj["field"] = f.name();
  vj["x0"] = to_json(x0);
  write_json((ctx.dir / "verdict.json").string(), vj);
  ctx.log("classify: " + std::to_string(cat.fixed_points.size()) + " fixed points, " +
          std::to_string(cat.cycles.size()) + " cycles; verdict " + to_string(v.kind));
  const bool exhausted = v.kind == BlowupVerdictKind::undetermined && v.s_used >= v.s_budget;
  return exhausted ? 3 : 0;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const SingularField f = field_of(cfg);
  const Vec x0 = x0_of(cfg, f);
  const auto blend = blend_of(cfg, f);
  if (!blend) throw Error(ErrorCode::ConfigError, "sweep needs a regularization");
  const std::vector<double> nus = nu_list_of(cfg);

  SweepOptions so;
  so.integration = integration_of(cfg, opts.tol_scale);
  so.integration.r_floor = 0;
  so.window_lo = cfg.sweep.window[0];
  so.window_hi = cfg.sweep.window[1];
  so.geometric = cfg.nu.empty() && cfg.nu_sequence.has_value();
  so.chi = cfg.nu_sequence ? cfg.nu_sequence->chi : 0;
  so.n_seeds = static_cast<int>(cfg.classify.n_seeds);
  const auto t_grid = linspace(cfg.t0, cfg.t1, static_cast<int>(cfg.sweep.grid_points));
  const SweepReport rep = inviscid_sweep(f, *blend, x0, cfg.t0, t_grid, nus, so);

  std::vector<std::string> files;
  int ok = 0;
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& run = rep.runs[i];
    files.push_back(nu_file(nus[i]));
    write_grid_csv(ctx.dir / files.back(), run.t_grid, run.x_grid, f.dim());
    if (run.ok) ++ok;
    else ctx.log("nu = " + fmt_g(nus[i], 6) + " failed: " + run.error);
  }
  json doc = to_json(rep, files);
  doc["field"] = f.name();
  write_json((ctx.dir / "sweep.json").string(), doc);
  ctx.log("sweep: " + std::string(to_string(rep.verdict)) + " (" + rep.verdict_detail + ")");
  return 2 * ok >= static_cast<int>(rep.runs.size()) ? 0 : 3;
}

// ---- figure data ----

namespace {

class Bundle {
public:
  Bundle(const Context& ctx, std::string figure)
      : dir_(ctx.dir / figure), figure_(std::move(figure)) {
    fs::create_directories(dir_);
  }
  void add(const std::string& name, const Table& t, const std::string& description) {
    t.write(dir_ / name);
    files_.push_back({{"path", name}, {"description", description}, {"columns", t.columns()}});
  }
  void note(const std::string& key, json value) { notes_[key] = std::move(value); }
  void finish() const {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["kind"] = "manifest";
    m["figure"] = figure_;
    m["files"] = files_;
    if (!notes_.empty()) m["parameters"] = notes_;
    write_json((dir_ / "manifest.json").string(), m);
  }

private:
  fs::path dir_;
  std::string figure_;
  json files_ = json::array();
  json notes_ = json::object();
};

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Table quiver(const SingularField& f, double half, int n) {
  Table t({"x1", "x2", "f1", "f2"});
  for (double a : linspace(-half, half, n))
    for (double b : linspace(-half, half, n)) {
      const Vec x = v2(a, b);
      if (x.norm() == 0) continue;
      const Vec fx = eval_field(f, x);
      t.row({a, b, fx[0], fx[1]});
    }
  return t;
}

void append_path(Table& t, double id, const Trajectory& tr, double extra = NAN,
                 bool with_extra = false) {
  for (const auto& s : tr.samples) {
    std::vector<double> head{id, s.t};
    for (Eigen::Index i = 0; i < s.x.size(); ++i) head.push_back(s.x[i]);
    if (with_extra) head.push_back(extra);
    t.row(head);
  }
}

Rhs ideal_rhs(const SingularField& f, double sign = 1) {
  return [&f, sign](double, const Vec& x) { return Vec(sign * eval_field(f, x)); };
}

void fig1(const Context& ctx, const IntegrationOptions& io) {
  Bundle b(ctx, "fig1");
  const auto f = builtin("saddle2d", 1.0 / 3);
  b.add("quiver.csv", quiver(f, 2, 25), "saddle2d vector field on a 25x25 grid of [-2,2]^2");
  Table paths({"id", "t", "x1", "x2", "enters_origin"});
  const int n = 24;
  for (int k = 0; k < n; ++k) {
    const double th = 2 * pi * (k + 0.5) / n;
    IntegrationOptions o = io;
    o.r_floor = 1e-8;
    o.stop = [](double, const Vec& x) { return x.norm() > 3; };
    const Trajectory tr = integrate(ideal_rhs(f), 2.0 * v2(std::cos(th), std::sin(th)), 0, 6, o);
    append_path(paths, k, tr, tr.status == TrajectoryStatus::hit_radius_floor ? 1 : 0, true);
  }
  b.add("trajectories.csv", paths,
        "forward solutions from 24 points of the circle r = 2; enters_origin = 1 marks finite-time "
        "blowup");
  Table ray({"t", "x1", "x2"});
  for (double t : linspace(0, 1.5, 151)) {
    const double r = std::pow((2.0 / 3) * (1.5 - t), 1.5);
    ray.row({t, -r, 0});
  }
  b.add("blowup_ray.csv", ray, "self-similar blowup solution along (-1,0) with t_b = 1.5");
  Table circle({"phi", "F_s", "F_r"});
  for (double phi : linspace(-pi, pi, 361)) {
    const Vec y = v2(std::cos(phi), std::sin(phi));
    const auto dec = decompose(f, y);
    const Vec e_phi = v2(-std::sin(phi), std::cos(phi));
    circle.row({phi, dec.f_s.dot(e_phi), dec.f_r});
  }
  b.add("circle_flow.csv", circle, "angular velocity F_s and radial part F_r on the unit circle");
  b.finish();
}

Table rescaled_path(const EscapeResult& e) {
  Table t({"tau", "X1", "X2"});
  for (const auto& s : e.path.samples) t.row({s.t}, s.x);
  return t;
}

void fig3(const Context& ctx, const IntegrationOptions& io) {
  Bundle b(ctx, "fig3");
  const auto f = builtin("saddle2d", 1.0 / 3);
  // Solutions leaving the origin: integrate backward from the upper half plane.
  Table out({"id", "t", "x1", "x2"});
  const int n = 15;
  for (int k = 0; k < n; ++k) {
    const double th = pi * (k + 0.5) / n;
    IntegrationOptions o = io;
    o.r_floor = 1e-8;
    const Trajectory back =
        integrate(ideal_rhs(f, -1), 1.5 * v2(std::cos(th), std::sin(th)), 0, 10, o);
    const double t_end = back.t_end();
    for (auto it = back.samples.rbegin(); it != back.samples.rend(); ++it)
      out.row({double(k), t_end - it->t}, it->x);
  }
  b.add("emanating.csv", out,
        "solutions of the singular system leaving the origin at t = 0, one id per curve");
  Table sel({"t", "x1", "x2"});
  for (double t : linspace(0, 2, 201)) sel.row({t, std::pow((2.0 / 3) * t, 1.5), 0});
  b.add("selected.csv", sel, "post-blowup ray chosen by an expelling regularization");
  const auto rf = make_polynomial_blend(f, v2(1, 1.3), 1.0);
  const EscapeResult e = rescaled_escape(f, rf, v2(-1, 0));
  b.add("rescaled_trapping.csv", rescaled_path(e),
        "rescaled solution X(tau) for the trapping blend G0 = (1, 1.3); stays near R <= 1");
  b.note("trapping_outcome", to_string(e.outcome));
  b.note("trapping_certificate", e.certificate);
  b.finish();
}

void fig3b(const Context& ctx, const IntegrationOptions& io) {
  Bundle b(ctx, "fig3b");
  const auto f = builtin("saddle2d", 1.0 / 3);
  const Vec g0 = v2(1, -2);
  const EscapeResult e = rescaled_escape(f, make_polynomial_blend(f, g0, 1.0), v2(-1, 0));
  b.add("rescaled_expelling.csv", rescaled_path(e),
        "rescaled solution X(tau) for the expelling blend G0 = (1, -2)");
  b.note("expelling_outcome", to_string(e.outcome));
  if (e.outcome == EscapeOutcome::expelled) b.note("y_esc", to_json(e.y_esc));

  IntegrationOptions o = io;
  o.r_floor = 0;
  const auto grid = linspace(0, 3, 301);
  for (double nu : {0.2, 0.1, 0.05, 0.025}) {
    const RegularizedRun run =
        simulate_regularized(make_polynomial_blend(f, g0, nu), v2(-1, 0), 0, 3, grid, o);
    Table t({"t", "x1", "x2"});
    for (std::size_t i = 0; i < run.x_grid.size(); ++i) t.row({grid[i]}, run.x_grid[i]);
    b.add(nu_file(nu), t, "regularized solution from (-1,0) at nu = " + fmt_g(nu, 6));
  }
  Table lim({"t", "x1", "x2"});
  const Vec ys = v2(-1, 0), yp = v2(1, 0);
  const auto fam = fixed_point_solutions(ys, -1, &yp, 1, 1.5, 1.0 / 3);
  for (double t : grid) lim.row({t}, t < 1.5 ? fam.pre_blowup(t) : (t == 1.5 ? Vec(Vec::Zero(2)) : eval_family(fam, t, 0)));
  b.add("limit.csv", lim, "inviscid limit: blowup ray to t = 1.5, then the ray along (1,0)");

  Table glob({"id", "t", "x1", "x2"});
  const std::vector<Vec> starts{v2(-1, 0.8), v2(-0.5, -1), v2(-1.5, 0.3), v2(-0.3, 0.9)};
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const RegularizedRun run =
        simulate_regularized(make_polynomial_blend(f, g0, 0.01), starts[k], 0, 4, {}, o);
    append_path(glob, double(k), run.trajectory);
  }
  b.add("global.csv", glob,
        "regularized solutions (nu = 0.01) from several points with x1 < 0; all leave along (1,0)");
  b.finish();
}

void fig6(const Context& ctx) {
  Bundle b(ctx, "fig6");
  const auto f = builtin("spiral2d", 1.0 / 3);
  b.add("quiver.csv", quiver(f, 2, 25), "spiral2d vector field on a 25x25 grid of [-2,2]^2");
  const auto c = reanchor_cycle(find_limit_cycle(f, v2(1, 0)), v2(1, 0));
  const auto fam = build_cycle_family(c, f, 0.0);
  Table t({"id", "zeta", "t", "x1", "x2"});
  const int n = 12;
  const auto ts = linspace(1e-3, 2.5, 250);
  for (int k = 0; k < n; ++k) {
    const double zeta = fam.zeta_period() * k / n;
    for (double tt : ts) t.row({double(k), zeta, tt}, eval_family(fam, tt, zeta));
  }
  b.add("family.csv", t, "solutions leaving the origin at t_b = 0 for 12 phases zeta");
  b.finish();
}

void fig8n(const Context& ctx, const IntegrationOptions& io) {
  Bundle b(ctx, "fig8n");
  const auto f = builtin("sphere3d", 1.0 / 3);
  Vec x0(3), g0(3);
  x0 << 0, 0, -1;
  g0 << 0, 0.1, 1;
  const double t_b = 3.0;
  const auto nus = geometric_sequence(2 * pi, 0.25, 0, 1, 3);
  BlendSpec blend;
  blend.g0 = g0;
  SweepOptions so;
  so.integration.rtol = std::min(so.integration.rtol, io.rtol);
  so.integration.atol = std::min(so.integration.atol, io.atol);
  so.geometric = true;
  const auto grid = linspace(0, t_b + 1, 401);
  const SweepReport rep = inviscid_sweep(f, blend, x0, 0, grid, nus, so);
  for (std::size_t i = 0; i < nus.size(); ++i) {
    Table t({"t", "x1", "x2", "x3"});
    for (std::size_t k = 0; k < rep.runs[i].x_grid.size(); ++k) t.row({grid[k]}, rep.runs[i].x_grid[k]);
    b.add("nu_n" + std::to_string(i + 1) + ".csv", t,
          "regularized solution at nu_" + std::to_string(i + 1) + " = " + fmt_g(nus[i], 6) +
              " (chi = 0)");
  }
  if (rep.matched_zeta) b.note("matched_zeta", rep.matched_zeta->zeta);
  json phases = json::array();
  for (const auto& p : rep.phases) phases.push_back({{"zeta", p.zeta}, {"distance", p.distance}});
  b.note("phase_fits", phases);
  b.note("verdict", to_string(rep.verdict));
  if (rep.family) {
    const ContinuationFamily& fam = *rep.family;
    const double P = fam.zeta_period();
    b.note("zeta_period", P);
    Table members({"id", "zeta", "t", "x1", "x2", "x3"});
    const auto ts = linspace(t_b + 1e-3, t_b + 1, 200);
    for (int k = 0; k < 10; ++k) {
      const double zeta = P * k / 10.0;
      for (double t : ts) members.row({double(k), zeta, t}, eval_family(fam, t, zeta));
    }
    b.add("family.csv", members, "family members with zeta / P = 0, 0.1, ..., 0.9, P = T<F_r>");
    Table cone({"zeta", "t", "x1", "x2", "x3"});
    for (double zeta : linspace(0, P, 61))
      for (double t : linspace(t_b + 1e-3, t_b + 1, 40)) cone.row({zeta, t}, eval_family(fam, t, zeta));
    b.add("cone.csv", cone, "samples of the conical surface swept by the family");
  }
  b.finish();
}

void figTriv(const Context& ctx) {
  Bundle b(ctx, "figTriv");
  const auto f = builtin("power1d", 1.0 / 3);
  const double nu = 0.4;
  const auto er = make_preset1d(f, Preset1d::expel_right, nu);
  const auto el = make_preset1d(f, Preset1d::expel_left, nu);
  const auto tr = make_preset1d(f, Preset1d::trap, nu);
  Table t({"x", "f", "f_expel_right", "f_expel_left", "f_trap"});
  for (double x : linspace(-1, 1, 401)) {
    Vec v(1);
    v << x;
    const double fi = x == 0 ? 0 : eval_field(f, v)[0];
    t.row({x, fi, eval_regularized(er, v)[0], eval_regularized(el, v)[0], eval_regularized(tr, v)[0]});
  }
  b.add("graphs.csv", t, "power1d field and its three regularizations, nu = 0.4");
  b.note("nu", nu);
  b.finish();
}

}  // namespace

std::vector<std::string> figure_ids() { return {"fig1", "fig3", "fig3b", "fig6", "fig8n", "figTriv"}; }

int cmd_reproduce(const std::string& figure, const RunConfig& cfg, const CommandOptions& opts) {
  const auto ids = figure_ids();
  if (std::find(ids.begin(), ids.end(), figure) == ids.end())
    throw Error(ErrorCode::UnknownFigure, "unknown figure '" + figure + "'");
  const Context ctx = make_context(cfg, opts);
  IntegrationOptions io = integration_of(cfg, opts.tol_scale);
  if (figure == "fig1") fig1(ctx, io);
  else if (figure == "fig3") fig3(ctx, io);
  else if (figure == "fig3b") fig3b(ctx, io);
  else if (figure == "fig6") fig6(ctx);
  else if (figure == "fig8n") fig8n(ctx, io);
  else figTriv(ctx);
  ctx.log("reproduce: wrote " + (ctx.dir / figure).string());
  return 0;
}

}  // namespace sflow
