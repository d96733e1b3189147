#pragma once

#include <vector>

#include "sflow/types.hpp"

namespace sflow {

// Trigonometric interpolant of equispaced samples f_j = f(j T / N), j < N.
// The Nyquist mode is kept (with the usual half weight) so the interpolant
// reproduces the samples exactly for even N.
class PeriodicSeries {
public:
  PeriodicSeries() = default;
  PeriodicSeries(const std::vector<double>& samples, double period);

  double period() const { return period_; }
  int size() const { return n_; }
  double mean() const { return a0_; }

  double operator()(double s) const;
  double derivative(double s) const;
  // Integral from 0 to s of (f - mean): a bounded T-periodic function.
  double integral_periodic_part(double s) const;
  double min_sampled() const;
  double max_sampled() const;

private:
  double period_ = 1.0;
  int n_ = 0;
  double a0_ = 0.0;
  std::vector<double> a_, b_;  // cosine and sine coefficients, index k = 1..K
  double nyquist_ = 0.0;
  std::vector<double> samples_;
};

// Vector-valued version (one series per component).
class PeriodicCurve {
public:
  PeriodicCurve() = default;
  PeriodicCurve(const std::vector<Vec>& samples, double period);

  double period() const { return period_; }
  int dim() const { return static_cast<int>(comp_.size()); }
  Vec operator()(double s) const;

private:
  double period_ = 1.0;
  std::vector<PeriodicSeries> comp_;
};

}  // namespace sflow
