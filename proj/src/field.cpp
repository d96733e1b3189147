#include "sflow/field.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace sflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OriginEvaluation: return "OriginEvaluation";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::SingularBlend: return "SingularBlend";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::EventDirection: return "EventDirection";
    case ErrorCode::NoEvent: return "NoEvent";
    case ErrorCode::NotBlowingUp: return "NotBlowingUp";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::SignError: return "SignError";
    case ErrorCode::NonPositiveMean: return "NonPositiveMean";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownFigure: return "UnknownFigure";
  }
  return "Error";
}

SingularField::SingularField(std::string name, int dim, double alpha, SphereMap map,
                             SphereJacobian jacobian, double r_floor)
    : name_(std::move(name)), dim_(dim), alpha_(alpha), map_(std::move(map)),
      jac_(std::move(jacobian)), r_floor_(r_floor) {
  if (dim_ < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 1");
  if (!(alpha_ < 1.0) || !std::isfinite(alpha_))
    throw Error(ErrorCode::InvalidArgument, "alpha must be finite and < 1");
  if (!map_) throw Error(ErrorCode::InvalidArgument, "sphere map is empty");
  if (!(r_floor_ >= 0.0)) throw Error(ErrorCode::InvalidArgument, "r_floor must be >= 0");
}

namespace {

Vec checked_unit(const Vec& y, int dim) {
  if (y.size() != dim) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  const double n = y.norm();
  if (!(std::abs(n - 1.0) <= 1e-9))
    throw Error(ErrorCode::NotUnitVector, "|y| = " + std::to_string(n));
  return y / n;
}

}  // namespace

Vec SingularField::sphere_map(const Vec& y) const { return map_(checked_unit(y, dim_)); }

Mat SingularField::jacobian(const Vec& y) const {
  const Vec u = checked_unit(y, dim_);
  if (jac_) return jac_(u);
  Mat J = Mat::Zero(dim_, dim_);
  if (dim_ == 1) return J;
  const Mat B = tangent_basis(u);
  const double h = 1e-6;
  for (int k = 0; k < B.cols(); ++k) {
    const Vec b = B.col(k);
    const Vec d = (map_(unit(u + h * b)) - map_(unit(u - h * b))) / (2 * h);
    J += d * b.transpose();
  }
  return J;
}

Vec unit(const Vec& v) { return v / v.norm(); }

Mat tangent_basis(const Vec& y) {
  const int d = static_cast<int>(y.size());
  if (d == 1) return Mat(1, 0);
  // Householder reflection mapping e_0 to y; its other columns span y's complement.
  Vec v = y;
  v[0] += (y[0] >= 0 ? 1.0 : -1.0) * y.norm();
  Mat H = Mat::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
  return H.rightCols(d - 1);
}

Vec eval_field(const SingularField& field, const Vec& x) {
  const double r = x.norm();
  if (!(r >= field.r_floor()) || r == 0.0)
    throw Error(ErrorCode::OriginEvaluation, "r = " + std::to_string(r));
  return std::pow(r, field.alpha()) * field.raw_map()(x / r);
}

SphericalDecomposition decompose(const SingularField& field, const Vec& y) {
  const Vec u = checked_unit(y, field.dim());
  const Vec F = field.raw_map()(u);
  SphericalDecomposition out;
  out.f_r = F.dot(u);
  if (field.dim() == 1) {
    out.f_s = Vec::Zero(1);
  } else {
    out.f_s = F - out.f_r * u;
  }
  return out;
}

double radial_part(const SingularField& field, const Vec& y) { return decompose(field, y).f_r; }

namespace {

SingularField make_power1d(double alpha) {
  auto F = [](const Vec& y) { return Vec(y); };
  auto J = [](const Vec&) { return Mat::Identity(1, 1); };
  return {"power1d", 1, alpha, F, J};
}

SingularField make_saddle2d(double alpha) {
  auto F = [](const Vec& y) {
    const double a = y[0], b = y[1];
    Vec f(2);
    f << a * a + a * b + a * b * b, a * b + b * b - a * a * b;
    return f;
  };
  auto J = [](const Vec& y) {
    const double a = y[0], b = y[1];
    Mat j(2, 2);
    j << 2 * a + b + b * b, a + 2 * a * b, b - 2 * a * b, a + 2 * b - a * a;
    return j;
  };
  return {"saddle2d", 2, alpha, F, J};
}

SingularField make_spiral2d(double alpha) {
  auto F = [](const Vec& y) {
    Vec f(2);
    f << y[0] - y[1], y[0] + y[1];
    return f;
  };
  auto J = [](const Vec&) {
    Mat j(2, 2);
    j << 1, -1, 1, 1;
    return j;
  };
  return {"spiral2d", 2, alpha, F, J};
}

// Rotation about the y3 axis, radial part y3/2, and a meridional push that
// creates cycles at y3 = 1/2 (stable) and y3 = -1/2 (unstable).
SingularField make_sphere3d(double alpha) {
  if (std::abs(alpha - 1.0 / 3.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "sphere3d is defined for alpha = 1/3 only");
  auto F = [](const Vec& y) {
    const double a = y[0], b = y[1], c = y[2];
    const double w = c * c - 0.25;
    Vec f(3);
    f << -b + 0.5 * c * a + w * a * c, a + 0.5 * c * b + w * b * c,
        0.5 * c * c - w * (a * a + b * b);
    return f;
  };
  auto J = [](const Vec& y) {
    const double a = y[0], b = y[1], c = y[2];
    const double w = c * c - 0.25;
    const double q = 3 * c * c - 0.25;
    Mat j(3, 3);
    j << 0.5 * c + w * c, -1, 0.5 * a + a * q,
        1, 0.5 * c + w * c, 0.5 * b + b * q,
        -2 * a * w, -2 * b * w, c - 2 * c * (a * a + b * b);
    return j;
  };
  return {"sphere3d", 3, 1.0 / 3.0, F, J};
}

}  // namespace

std::vector<std::string> builtin_names() { return {"power1d", "saddle2d", "spiral2d", "sphere3d"}; }

SingularField builtin(const std::string& name, double alpha) {
  if (name == "power1d") return make_power1d(alpha);
  if (name == "saddle2d") return make_saddle2d(alpha);
  if (name == "spiral2d") return make_spiral2d(alpha);
  if (name == "sphere3d") return make_sphere3d(alpha);
  throw Error(ErrorCode::UnknownField, name);
}

SingularField exponent_normalize(const SingularField& field) {
  const double a = field.alpha();
  if (a == 0.0) return field;
  const auto base = field.raw_map();
  auto F = [base, a](const Vec& y) {
    const Vec f = base(y);
    return Vec(f - a * f.dot(y) * y);
  };
  SingularField::SphereJacobian J;
  if (field.has_analytic_jacobian()) {
    J = [field, base, a](const Vec& y) {
      const Vec f = base(y);
      const Mat Jb = field.jacobian(y);
      const int d = static_cast<int>(y.size());
      Vec grad = Jb.transpose() * y + f;
      return Mat(Jb - a * (y * grad.transpose() + f.dot(y) * Mat::Identity(d, d)));
    };
  }
  return {field.name() + "_normalized", field.dim(), 0.0, F, J, field.r_floor()};
}

std::vector<Vec> sphere_points(int d, int n, std::uint64_t seed) {
  std::vector<Vec> pts;
  if (d == 1) {
    pts.push_back(Vec::Constant(1, 1.0));
    pts.push_back(Vec::Constant(1, -1.0));
    return pts;
  }
  if (n < 1) return pts;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  const double pi = std::numbers::pi;
  if (d == 2) {
    for (int k = 0; k < n; ++k) {
      const double phi = 2 * pi * (k + 0.5 + jitter(rng)) / n;
      Vec p(2);
      p << std::cos(phi), std::sin(phi);
      pts.push_back(p);
    }
  } else if (d == 3) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5 + jitter(rng)) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      Vec p(3);
      p << rho * std::cos(phi), rho * std::sin(phi), z;
      pts.push_back(unit(p));
    }
  } else {
    for (int k = 0; k < n; ++k) pts.push_back(random_unit(d, rng));
  }
  return pts;
}

}  // namespace sflow
