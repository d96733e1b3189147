#include "sflow/serialize.hpp"

#include <cmath>
#include <fstream>

namespace sflow {

namespace {

// JSON has no inf/nan; they become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json matrix(const std::vector<std::vector<double>>& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(nums(row));
  return a;
}

json header(const char* kind) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  return j;
}

json phase(const PhaseFit& p) {
  return {{"zeta", num(p.zeta)}, {"distance", num(p.distance)}, {"uncertainty", num(p.uncertainty)}};
}

}  // namespace

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json to_json(const AttractorInfo& a, bool with_orbit) {
  json j;
  j["kind"] = to_string(a.kind);
  j["location"] = to_json(a.point);
  if (a.kind == AttractorKind::limit_cycle) {
    j["period"] = num(a.period);
    j["closure"] = num(a.closure);
    if (with_orbit) {
      json orbit = json::array();
      for (const Vec& y : a.orbit) orbit.push_back(to_json(y));
      j["orbit"] = orbit;
    }
  }
  j["mean_radial"] = num(a.mean_radial);
  j["label"] = to_string(a.label);
  j["stable"] = a.stable;
  j["exponents"] = nums(a.exponents);
  return j;
}

json to_json(const Catalog& c) {
  json j = header("catalog");
  j["fixed_points"] = json::array();
  for (const auto& a : c.fixed_points) j["fixed_points"].push_back(to_json(a));
  j["cycles"] = json::array();
  for (const auto& a : c.cycles) j["cycles"].push_back(to_json(a));
  return j;
}

json to_json(const BlowupVerdict& v) {
  json j = header("verdict");
  j["verdict"] = to_string(v.kind);
  j["t_b"] = v.t_b ? num(*v.t_b) : json(nullptr);
  j["averages"] = {{"lower", num(v.averages.lower)},
                   {"upper", num(v.averages.upper)},
                   {"horizon", num(v.averages.horizon)}};
  j["s_budget"] = num(v.s_budget);
  j["s_used"] = num(v.s_used);
  j["y_final"] = to_json(v.y_final);
  return j;
}

json to_json(const EscapeResult& e) {
  json j = header("escape");
  j["outcome"] = to_string(e.outcome);
  j["tau_ent"] = num(e.tau_ent);
  if (e.outcome == EscapeOutcome::expelled) {
    j["tau_esc"] = num(e.tau_esc);
    j["y_esc"] = to_json(e.y_esc);
  }
  if (e.outcome == EscapeOutcome::trapped) j["r_bound"] = num(e.r_bound);
  j["revisits"] = e.revisits;
  j["attractor"] = e.attractor ? to_json(*e.attractor, false) : json(nullptr);
  j["certificate"] = e.certificate;
  return j;
}

json to_json(const SweepReport& r, const std::vector<std::string>& csv_files) {
  json j = header("sweep");
  j["nu"] = nums(r.nu_values);
  j["chi"] = num(r.chi);
  j["t_b"] = num(r.t_b);
  j["t_grid"] = nums(r.t_grid);
  json runs = json::array();
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    json run;
    run["nu"] = num(r.nu_values[i]);
    run["csv"] = i < csv_files.size() ? csv_files[i] : "";
    run["ok"] = r.runs[i].ok;
    run["ball_crossings"] = r.runs[i].ball_crossings;
    if (!r.runs[i].ok) run["error"] = r.runs[i].error;
    runs.push_back(run);
  }
  j["runs"] = runs;
  j["distances"] = {{"pairwise_sup", matrix(r.pairwise_sup_distances)},
                    {"pre_blowup_sup", matrix(r.pre_blowup_distances)},
                    {"window_t", {num(r.window_t.empty() ? NAN : r.window_t.front()),
                                  num(r.window_t.empty() ? NAN : r.window_t.back())}},
                    {"sup_abs", nums(r.sup_abs)},
                    {"ray", nums(r.ray_distance)},
                    {"cycle_set", nums(r.cycle_distance)}};
  if (r.trivial_fit)
    j["trivial_fit"] = {{"C", num(r.trivial_fit->C)}, {"q", num(r.trivial_fit->q)},
                        {"r2", num(r.trivial_fit->r2)}};
  if (r.ray_fit)
    j["ray_fit"] = {{"C", num(r.ray_fit->C)}, {"q", num(r.ray_fit->q)}, {"r2", num(r.ray_fit->r2)}};
  j["ray_direction"] = r.ray_direction ? to_json(*r.ray_direction) : json(nullptr);
  json ph = json::array();
  for (const auto& p : r.phases) ph.push_back(phase(p));
  j["phases"] = ph;
  j["zeta"] = r.matched_zeta ? phase(*r.matched_zeta) : json(nullptr);
  if (r.family && r.family->cycle) j["zeta_period"] = num(r.family->zeta_period());
  j["verdict"] = to_string(r.verdict);
  j["verdict_detail"] = r.verdict_detail;
  return j;
}

json trajectory_summary(const Trajectory& tr, std::optional<double> t_b) {
  json j = header("summary");
  j["status"] = to_string(tr.status);
  j["t_b"] = t_b ? num(*t_b) : json(nullptr);
  j["t_end"] = tr.samples.empty() ? json(nullptr) : num(tr.t_end());
  j["final_state"] = tr.samples.empty() ? json::array() : to_json(tr.final_state());
  j["n_samples"] = tr.samples.size();
  if (!tr.message.empty()) j["message"] = tr.message;
  return j;
}

std::string check_schema(const json& doc, const std::string& kind) {
  if (!doc.is_object()) return "document is not an object";
  if (!doc.contains("schema_version") || doc["schema_version"] != kSchemaVersion)
    return "missing or unsupported schema_version";
  if (!doc.contains("kind") || doc["kind"] != kind) return "kind is not " + kind;
  auto need = [&](std::initializer_list<const char*> keys) -> std::string {
    for (const char* k : keys)
      if (!doc.contains(k)) return std::string("missing key ") + k;
    return {};
  };
  if (kind == "summary") return need({"status", "t_b", "t_end", "final_state"});
  if (kind == "catalog") {
    if (auto e = need({"fixed_points", "cycles"}); !e.empty()) return e;
    for (const char* list : {"fixed_points", "cycles"})
      for (const auto& a : doc[list])
        for (const char* k : {"kind", "location", "mean_radial", "label", "exponents"})
          if (!a.contains(k)) return std::string("attractor without ") + k;
    return {};
  }
  if (kind == "verdict") return need({"verdict", "t_b", "averages", "s_used"});
  if (kind == "escape") return need({"outcome", "tau_ent", "certificate"});
  if (kind == "sweep") {
    if (auto e = need({"nu", "chi", "t_grid", "runs", "distances", "zeta", "verdict"}); !e.empty())
      return e;
    if (doc["runs"].size() != doc["nu"].size()) return "runs and nu differ in length";
    return {};
  }
  if (kind == "manifest") {
    if (auto e = need({"figure", "files"}); !e.empty()) return e;
    for (const auto& f : doc["files"])
      if (!f.contains("path") || !f.contains("description") || !f.contains("columns"))
        return "file entry without path, description or columns";
    return {};
  }
  return "unknown document kind " + kind;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  os << doc.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  return json::parse(is);
}

}  // namespace sflow
