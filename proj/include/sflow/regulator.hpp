#pragma once

#include <string>

#include "sflow/field.hpp"

namespace sflow {

enum class BlendKind { polynomial_blend, preset_expel, preset_trap, custom };
const char* to_string(BlendKind kind);

enum class Preset1d { expel_right, expel_left, trap };

// f^nu: the ideal field outside |x| = nu, nu^alpha G(x/nu) inside.
class RegularizedField {
public:
  using InnerMap = std::function<Vec(const Vec&)>;

  RegularizedField(SingularField base, double nu, InnerMap inner, BlendKind kind);

  const SingularField& base() const { return base_; }
  double nu() const { return nu_; }
  BlendKind kind() const { return kind_; }
  Vec inner_map(const Vec& X) const { return inner_(X); }
  const InnerMap& raw_inner() const { return inner_; }

  // Same inner map at a different ball radius.
  RegularizedField with_nu(double nu) const;

private:
  SingularField base_;
  double nu_;
  InnerMap inner_;
  BlendKind kind_;
};

// Cubic blend weight 3 rho^2 - 2 rho^3.
double blend_weight(double rho);

// G(X) = xi(rho) f(X) + (1 - xi(rho)) B(X), rho = |X|, evaluated without
// forming the singular product xi * rho^alpha explicitly.
Vec blend_inner(const SingularField& base, const Vec& X, const Vec& background);

RegularizedField make_polynomial_blend(const SingularField& base, const Vec& g0, double nu);
// 1-D presets: background (sigma + X)/2 for expel (sigma = +1 right, -1 left),
// (1 - 8X)/6 for trap. Base must be power1d-like (d = 1).
RegularizedField make_preset1d(const SingularField& base, Preset1d preset, double nu);
RegularizedField make_custom(const SingularField& base, RegularizedField::InnerMap inner, double nu);

Vec eval_regularized(const RegularizedField& rf, const Vec& x);

struct SmoothnessReport {
  double value_jump = 0;     // absolute, worst over directions
  double jacobian_jump = 0;  // relative (Frobenius), worst over directions
  int n_directions = 0;
  Vec worst_direction;
  bool pass = false;
  double value_tol = 0;
  double jacobian_tol = 1e-3;
};

SmoothnessReport check_smoothness(const RegularizedField& rf, int n_directions = 256,
                                  double jacobian_tol = 1e-3);

}  // namespace sflow
