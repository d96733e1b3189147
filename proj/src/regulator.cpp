#include "sflow/regulator.hpp"

#include <cmath>

namespace sflow {

const char* to_string(BlendKind kind) {
  switch (kind) {
    case BlendKind::polynomial_blend: return "polynomial_blend";
    case BlendKind::preset_expel: return "preset_expel";
    case BlendKind::preset_trap: return "preset_trap";
    case BlendKind::custom: return "custom";
  }
  return "custom";
}

RegularizedField::RegularizedField(SingularField base, double nu, InnerMap inner, BlendKind kind)
    : base_(std::move(base)), nu_(nu), inner_(std::move(inner)), kind_(kind) {
  if (!(nu_ > 0) || !std::isfinite(nu_)) throw Error(ErrorCode::InvalidArgument, "nu must be > 0");
  if (!inner_) throw Error(ErrorCode::InvalidArgument, "inner map is empty");
}

RegularizedField RegularizedField::with_nu(double nu) const { return {base_, nu, inner_, kind_}; }

double blend_weight(double rho) { return rho * rho * (3.0 - 2.0 * rho); }

Vec blend_inner(const SingularField& base, const Vec& X, const Vec& background) {
  const double rho = X.norm();
  if (rho == 0.0) return background;
  const double a = base.alpha();
  const double xi = blend_weight(rho);
  // xi(rho) * rho^alpha = rho^(2+alpha) (3 - 2 rho)
  const double xf = std::pow(rho, 2.0 + a) * (3.0 - 2.0 * rho);
  return xf * base.raw_map()(X / rho) + (1.0 - xi) * background;
}

RegularizedField make_polynomial_blend(const SingularField& base, const Vec& g0, double nu) {
  if (base.alpha() <= -2.0)
    throw Error(ErrorCode::SingularBlend, "polynomial blend requires alpha > -2");
  if (g0.size() != base.dim()) throw Error(ErrorCode::InvalidArgument, "g0 dimension mismatch");
  if (!g0.allFinite()) throw Error(ErrorCode::InvalidArgument, "g0 must be finite");
  const SingularField b = base;
  const Vec g = g0;
  return {base, nu, [b, g](const Vec& X) { return blend_inner(b, X, g); },
          BlendKind::polynomial_blend};
}

RegularizedField make_preset1d(const SingularField& base, Preset1d preset, double nu) {
  if (base.dim() != 1) throw Error(ErrorCode::InvalidArgument, "1-D presets need d = 1");
  if (base.alpha() <= -2.0)
    throw Error(ErrorCode::SingularBlend, "blend presets require alpha > -2");
  const SingularField b = base;
  if (preset == Preset1d::trap) {
    return {base, nu,
            [b](const Vec& X) {
              Vec bg(1);
              bg[0] = (1.0 - 8.0 * X[0]) / 6.0;
              return blend_inner(b, X, bg);
            },
            BlendKind::preset_trap};
  }
  const double sigma = preset == Preset1d::expel_right ? 1.0 : -1.0;
  return {base, nu,
          [b, sigma](const Vec& X) {
            Vec bg(1);
            bg[0] = (sigma + X[0]) / 2.0;
            return blend_inner(b, X, bg);
          },
          BlendKind::preset_expel};
}

RegularizedField make_custom(const SingularField& base, RegularizedField::InnerMap inner,
                             double nu) {
  return {base, nu, std::move(inner), BlendKind::custom};
}

Vec eval_regularized(const RegularizedField& rf, const Vec& x) {
  const double r = x.norm();
  if (r > rf.nu()) return eval_field(rf.base(), x);
  return std::pow(rf.nu(), rf.base().alpha()) * rf.inner_map(x / rf.nu());
}

SmoothnessReport check_smoothness(const RegularizedField& rf, int n_directions,
                                  double jacobian_tol) {
  const SingularField& F = rf.base();
  const int d = F.dim();
  const double nu = rf.nu();
  const double a = F.alpha();
  const double h = 1e-6 * nu;
  auto outer = [&](const Vec& x) { return eval_field(F, x); };
  auto inner = [&](const Vec& x) { return Vec(std::pow(nu, a) * rf.inner_map(x / nu)); };

  SmoothnessReport rep;
  rep.value_tol = 1e-9 * std::pow(nu, a);
  rep.jacobian_tol = jacobian_tol;
  const auto dirs = sphere_points(d, d == 1 ? 2 : std::max(n_directions, 200), 7);
  rep.n_directions = static_cast<int>(dirs.size());
  double worst = -1;
  for (const Vec& y : dirs) {
    const Vec x = nu * y;
    const Vec fo = outer(x), fi = inner(x);
    const double vj = (fo - fi).norm();
    // Jacobians in the basis {outward normal, tangents}. The normal column is
    // one-sided on each branch; tangential columns are central differences
    // evaluated with each branch's formula.
    Mat Jo(d, d), Ji(d, d);
    Jo.col(0) = (outer(x + h * y) - fo) / h;
    Ji.col(0) = (fi - inner(x - h * y)) / h;
    const Mat B = tangent_basis(y);
    for (int k = 0; k < B.cols(); ++k) {
      const Vec b = B.col(k);
      Jo.col(k + 1) = (outer(x + h * b) - outer(x - h * b)) / (2 * h);
      Ji.col(k + 1) = (inner(x + h * b) - inner(x - h * b)) / (2 * h);
    }
    const double scale = std::max(Jo.norm(), 1e-300);
    const double jj = (Jo - Ji).norm() / scale;
    const double score = vj / rep.value_tol + jj / jacobian_tol;
    if (score >= worst) {
      worst = score;
      rep.worst_direction = y;
    }
    rep.value_jump = std::max(rep.value_jump, vj);
    rep.jacobian_jump = std::max(rep.jacobian_jump, jj);
  }
  rep.pass = rep.value_jump <= rep.value_tol && rep.jacobian_jump <= rep.jacobian_tol;
  return rep;
}

}  // namespace sflow
