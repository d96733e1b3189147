#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sflow/error.hpp"
#include "sflow/types.hpp"

namespace sflow {

// Ideal self-similar field f(x) = r^alpha F(x/r), described by its sphere map F.
class SingularField {
public:
  using SphereMap = std::function<Vec(const Vec&)>;
  using SphereJacobian = std::function<Mat(const Vec&)>;

  SingularField(std::string name, int dim, double alpha, SphereMap map,
                SphereJacobian jacobian = {}, double r_floor = 1e-300);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double r_floor() const { return r_floor_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jac_); }

  // F(y). Vectors off the sphere by more than 1e-9 are rejected, smaller
  // deviations are projected away.
  Vec sphere_map(const Vec& y) const;

  // Derivative of F on the sphere. Without an analytic jacobian the result
  // is assembled from central differences along tangent directions and acts
  // as zero on the normal.
  Mat jacobian(const Vec& y) const;

  const SphereMap& raw_map() const { return map_; }

private:
  std::string name_;
  int dim_;
  double alpha_;
  SphereMap map_;
  SphereJacobian jac_;
  double r_floor_;
};

struct SphericalDecomposition {
  double f_r = 0.0;
  Vec f_s;
};

Vec eval_field(const SingularField& field, const Vec& x);
SphericalDecomposition decompose(const SingularField& field, const Vec& y);
double radial_part(const SingularField& field, const Vec& y);

// power1d, saddle2d, spiral2d, sphere3d.
SingularField builtin(const std::string& name, double alpha);
std::vector<std::string> builtin_names();

SingularField exponent_normalize(const SingularField& field);

// Helpers shared by several modules.
Vec unit(const Vec& v);
// Orthonormal basis of the tangent space at y, as columns (d x (d-1)).
Mat tangent_basis(const Vec& y);
// Quasi-uniform points on S^(d-1). n is ignored for d = 1 (both points returned).
std::vector<Vec> sphere_points(int d, int n, std::uint64_t seed = 1);
// Uniformly distributed random unit vector.
template <class Rng>
Vec random_unit(int d, Rng& rng);

}  // namespace sflow

#include <random>

template <class Rng>
sflow::Vec sflow::random_unit(int d, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = n01(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}
