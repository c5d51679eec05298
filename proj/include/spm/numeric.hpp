#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace spm {

/// Neumaier-compensated accumulator. Long trajectory sums are compared
/// against closed forms, so plain summation drift is not acceptable there.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double l1_norm(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s += std::abs(x);
  return s.value();
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s.value();
}

/// |a - b| / max(|a|, |b|), with 0 when both vanish.
inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Sign with a dead zone: values within `zero_tol` of zero count as zero.
inline int tolerant_sign(double x, double zero_tol) {
  if (x > zero_tol) return 1;
  if (x < -zero_tol) return -1;
  return 0;
}

}  // namespace spm
