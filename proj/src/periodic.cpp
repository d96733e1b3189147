#include "sflow/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sflow/error.hpp"

namespace sflow {

PeriodicSeries::PeriodicSeries(const std::vector<double>& samples, double period)
    : period_(period), n_(static_cast<int>(samples.size())), samples_(samples) {
  if (n_ < 2 || !(period > 0))
    throw Error(ErrorCode::InvalidArgument, "periodic series needs >= 2 samples and T > 0");
  const int K = (n_ - 1) / 2;
  a_.assign(K + 1, 0.0);
  b_.assign(K + 1, 0.0);
  const double w = 2 * std::numbers::pi / n_;
  double sum = 0;
  for (double v : samples) sum += v;
  a0_ = sum / n_;
  for (int k = 1; k <= K; ++k) {
    double ak = 0, bk = 0;
    for (int j = 0; j < n_; ++j) {
      ak += samples[j] * std::cos(w * k * j);
      bk += samples[j] * std::sin(w * k * j);
    }
    a_[k] = 2 * ak / n_;
    b_[k] = 2 * bk / n_;
  }
  if (n_ % 2 == 0) {
    double c = 0;
    for (int j = 0; j < n_; ++j) c += samples[j] * ((j % 2) ? -1.0 : 1.0);
    nyquist_ = c / n_;
  }
}

namespace {

// Runs f(k, cos k theta, sin k theta) for k = 1..K by complex rotation.
template <class F>
void harmonics(double theta, int K, F&& f) {
  const double c1 = std::cos(theta), s1 = std::sin(theta);
  double c = 1, s = 0;
  for (int k = 1; k <= K; ++k) {
    const double cn = c * c1 - s * s1;
    s = s * c1 + c * s1;
    c = cn;
    if (k % 64 == 0) {  // refresh to bound the drift of the recurrence
      c = std::cos(k * theta);
      s = std::sin(k * theta);
    }
    f(k, c, s);
  }
}

}  // namespace

double PeriodicSeries::operator()(double s) const {
  const double theta = 2 * std::numbers::pi * s / period_;
  double v = a0_;
  harmonics(theta, static_cast<int>(a_.size()) - 1,
            [&](int k, double c, double sn) { v += a_[k] * c + b_[k] * sn; });
  if (nyquist_ != 0.0) v += nyquist_ * std::cos(0.5 * n_ * theta);
  return v;
}

double PeriodicSeries::derivative(double s) const {
  const double w = 2 * std::numbers::pi / period_;
  double v = 0;
  harmonics(w * s, static_cast<int>(a_.size()) - 1,
            [&](int k, double c, double sn) { v += k * w * (b_[k] * c - a_[k] * sn); });
  if (nyquist_ != 0.0) v -= nyquist_ * 0.5 * n_ * w * std::sin(0.5 * n_ * w * s);
  return v;
}

double PeriodicSeries::integral_periodic_part(double s) const {
  const double w = 2 * std::numbers::pi / period_;
  double v = 0;
  harmonics(w * s, static_cast<int>(a_.size()) - 1, [&](int k, double c, double sn) {
    v += (a_[k] * sn + b_[k] * (1.0 - c)) / (k * w);
  });
  if (nyquist_ != 0.0) v += nyquist_ * std::sin(0.5 * n_ * w * s) / (0.5 * n_ * w);
  return v;
}

double PeriodicSeries::min_sampled() const {
  return *std::min_element(samples_.begin(), samples_.end());
}
double PeriodicSeries::max_sampled() const {
  return *std::max_element(samples_.begin(), samples_.end());
}

PeriodicCurve::PeriodicCurve(const std::vector<Vec>& samples, double period) : period_(period) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty curve");
  const int d = static_cast<int>(samples.front().size());
  for (int i = 0; i < d; ++i) {
    std::vector<double> c;
    c.reserve(samples.size());
    for (const auto& v : samples) c.push_back(v[i]);
    comp_.emplace_back(c, period);
  }
}

Vec PeriodicCurve::operator()(double s) const {
  Vec v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = comp_[i](s);
  return v;
}

}  // namespace sflow
