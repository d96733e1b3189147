#include "sflow/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "sflow/error.hpp"

namespace sflow {

namespace {

using Value = std::variant<double, std::string, std::vector<double>>;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorCode::ConfigError,
              (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + msg);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

Value parse_value(const std::string& raw, int line) {
  const std::string v = trim(raw);
  if (v.empty()) fail(line, "missing value");
  if (v.front() == '[') {
    if (v.back() != ']') fail(line, "unterminated list");
    std::vector<double> out;
    const std::string body = trim(v.substr(1, v.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double d;
      if (!parse_number(trim(item), d)) fail(line, "bad list element '" + trim(item) + "'");
      out.push_back(d);
    }
    return out;
  }
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
    return v.substr(1, v.size() - 2);
  }
  double d;
  if (parse_number(v, d)) return d;
  for (char c : v)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
          c == '/'))
      fail(line, "bad value '" + v + "'");
  return v;
}

double as_number(const Value& v, const std::string& key, int line) {
  if (auto p = std::get_if<double>(&v)) return *p;
  fail(line, key + " expects a number");
}
std::string as_word(const Value& v, const std::string& key, int line) {
  if (auto p = std::get_if<std::string>(&v)) return *p;
  fail(line, key + " expects a name");
}
std::vector<double> as_list(const Value& v, const std::string& key, int line) {
  if (auto p = std::get_if<std::vector<double>>(&v)) return *p;
  if (auto p = std::get_if<double>(&v)) return {*p};
  fail(line, key + " expects a list");
}

RunConfig::NuSequence& seq(RunConfig& c) {
  if (!c.nu_sequence) c.nu_sequence.emplace();
  return *c.nu_sequence;
}

void assign(RunConfig& c, const std::string& key, const Value& v, int line) {
  if (key == "field") c.field = as_word(v, key, line);
  else if (key == "alpha") c.alpha = as_number(v, key, line);
  else if (key == "x0") c.x0 = as_list(v, key, line);
  else if (key == "t0") c.t0 = as_number(v, key, line);
  else if (key == "t1") c.t1 = as_number(v, key, line);
  else if (key == "seed") {
    const double s = as_number(v, key, line);
    if (!(s >= 0) || s != std::floor(s)) fail(line, "seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  else if (key == "integrator.rtol") c.integrator.rtol = as_number(v, key, line);
  else if (key == "integrator.atol") c.integrator.atol = as_number(v, key, line);
  else if (key == "integrator.max_step") c.integrator.max_step = as_number(v, key, line);
  else if (key == "integrator.r_floor") c.integrator.r_floor = as_number(v, key, line);
  else if (key == "regularization.kind") c.regularization.kind = as_word(v, key, line);
  else if (key == "regularization.g0") c.regularization.g0 = as_list(v, key, line);
  else if (key == "regularization.preset") c.regularization.preset = as_word(v, key, line);
  else if (key == "regularization.sigma") c.regularization.sigma = as_number(v, key, line);
  else if (key == "nu") c.nu = as_list(v, key, line);
  else if (key == "nu_sequence.T") seq(c).T = as_number(v, key, line);
  else if (key == "nu_sequence.mean_fr") seq(c).mean_fr = as_number(v, key, line);
  else if (key == "nu_sequence.chi") seq(c).chi = as_number(v, key, line);
  else if (key == "nu_sequence.n_range") seq(c).n_range = as_list(v, key, line);
  else if (key == "sweep.window") c.sweep.window = as_list(v, key, line);
  else if (key == "sweep.grid_points") c.sweep.grid_points = as_number(v, key, line);
  else if (key == "classify.n_seeds") c.classify.n_seeds = as_number(v, key, line);
  else if (key == "classify.window") c.classify.window = as_number(v, key, line);
  else if (key == "classify.s_budget") c.classify.s_budget = as_number(v, key, line);
  else if (key == "outputs.dir") c.outdir = as_word(v, key, line);
  else fail(line, "unknown key '" + key + "'");
}

void apply_line(RunConfig& c, const std::string& raw, int line) {
  std::string s = raw;
  if (auto h = s.find('#'); h != std::string::npos) s = s.substr(0, h);
  s = trim(s);
  if (s.empty()) return;
  const auto eq = s.find('=');
  if (eq == std::string::npos) fail(line, "expected 'key = value'");
  const std::string key = trim(s.substr(0, eq));
  if (key.empty()) fail(line, "empty key");
  assign(c, key, parse_value(s.substr(eq + 1), line), line);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out + "]";
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& line) { apply_line(cfg, line, 0); }

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) apply_line(c, line, ++n);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream o;
  o << "field = " << c.field << "\n";
  o << "alpha = " << num(c.alpha) << "\n";
  o << "x0 = " << list(c.x0) << "\n";
  o << "t0 = " << num(c.t0) << "\n";
  o << "t1 = " << num(c.t1) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "integrator.rtol = " << num(c.integrator.rtol) << "\n";
  o << "integrator.atol = " << num(c.integrator.atol) << "\n";
  o << "integrator.max_step = " << num(c.integrator.max_step) << "\n";
  o << "integrator.r_floor = " << num(c.integrator.r_floor) << "\n";
  o << "regularization.kind = " << c.regularization.kind << "\n";
  o << "regularization.g0 = " << list(c.regularization.g0) << "\n";
  o << "regularization.preset = " << c.regularization.preset << "\n";
  o << "regularization.sigma = " << num(c.regularization.sigma) << "\n";
  o << "nu = " << list(c.nu) << "\n";
  if (c.nu_sequence) {
    o << "nu_sequence.T = " << num(c.nu_sequence->T) << "\n";
    o << "nu_sequence.mean_fr = " << num(c.nu_sequence->mean_fr) << "\n";
    o << "nu_sequence.chi = " << num(c.nu_sequence->chi) << "\n";
    o << "nu_sequence.n_range = " << list(c.nu_sequence->n_range) << "\n";
  }
  o << "sweep.window = " << list(c.sweep.window) << "\n";
  o << "sweep.grid_points = " << num(c.sweep.grid_points) << "\n";
  o << "classify.n_seeds = " << num(c.classify.n_seeds) << "\n";
  o << "classify.window = " << num(c.classify.window) << "\n";
  o << "classify.s_budget = " << num(c.classify.s_budget) << "\n";
  o << "outputs.dir = \"" << c.outdir << "\"\n";
  return o.str();
}

void validate(const RunConfig& c) {
  auto finite = [](double v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ConfigError, std::string(what) + " must be finite");
  };
  auto finite_list = [&](const std::vector<double>& v, const char* what) {
    for (double d : v) finite(d, what);
  };
  finite(c.alpha, "alpha");
  if (!(c.alpha < 1)) throw Error(ErrorCode::ConfigError, "alpha must be < 1");
  finite_list(c.x0, "x0");
  finite(c.t0, "t0");
  finite(c.t1, "t1");
  if (!(c.t1 > c.t0)) throw Error(ErrorCode::ConfigError, "t1 must exceed t0");
  if (!(c.integrator.rtol > 0) || !(c.integrator.atol > 0))
    throw Error(ErrorCode::ConfigError, "tolerances must be positive");
  finite(c.integrator.rtol, "integrator.rtol");
  finite(c.integrator.atol, "integrator.atol");
  finite(c.integrator.max_step, "integrator.max_step");
  finite(c.integrator.r_floor, "integrator.r_floor");
  if (c.integrator.max_step < 0 || c.integrator.r_floor < 0)
    throw Error(ErrorCode::ConfigError, "max_step and r_floor must be >= 0");
  const auto& k = c.regularization.kind;
  if (k != "none" && k != "polynomial_blend" && k != "preset1d")
    throw Error(ErrorCode::ConfigError, "unknown regularization.kind '" + k + "'");
  finite_list(c.regularization.g0, "regularization.g0");
  if (c.regularization.preset != "expel" && c.regularization.preset != "trap")
    throw Error(ErrorCode::ConfigError, "regularization.preset must be expel or trap");
  if (c.regularization.sigma != 1 && c.regularization.sigma != -1)
    throw Error(ErrorCode::ConfigError, "regularization.sigma must be +1 or -1");
  finite_list(c.nu, "nu");
  for (double v : c.nu)
    if (!(v > 0)) throw Error(ErrorCode::ConfigError, "nu values must be positive");
  if (c.nu_sequence) {
    finite(c.nu_sequence->T, "nu_sequence.T");
    finite(c.nu_sequence->mean_fr, "nu_sequence.mean_fr");
    finite(c.nu_sequence->chi, "nu_sequence.chi");
    if (!(c.nu_sequence->T > 0) || !(c.nu_sequence->mean_fr > 0))
      throw Error(ErrorCode::ConfigError, "nu_sequence.T and mean_fr must be positive");
    const auto& r = c.nu_sequence->n_range;
    if (r.size() != 2 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1]) || r[1] < r[0])
      throw Error(ErrorCode::ConfigError, "nu_sequence.n_range must be [lo, hi] integers");
  }
  if (c.sweep.window.size() != 2 || !(c.sweep.window[1] > c.sweep.window[0]) ||
      !(c.sweep.window[0] > 0))
    throw Error(ErrorCode::ConfigError, "sweep.window must be [lo, hi] with 0 < lo < hi");
  if (c.outdir.find('"') != std::string::npos)
    throw Error(ErrorCode::ConfigError, "outputs.dir must not contain quotes");
  if (!(c.sweep.grid_points >= 2)) throw Error(ErrorCode::ConfigError, "sweep.grid_points >= 2");
  if (!(c.classify.n_seeds >= 1) || !(c.classify.window > 0) || !(c.classify.s_budget > 0))
    throw Error(ErrorCode::ConfigError, "classify settings must be positive");
  if (c.outdir.empty()) throw Error(ErrorCode::ConfigError, "outputs.dir is empty");
}

}  // namespace sflow
