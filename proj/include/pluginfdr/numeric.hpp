#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace pluginfdr {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

/// Sample mean and the standard error of the mean (plug-in sample standard
/// deviation over sqrt(n)). Two-pass, compensated.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(std::span<const double> xs) {
  MeanSe out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  out.mean = compensated_sum(xs) / static_cast<double>(n);
  if (n < 2) return out;
  CompensatedSum ss;
  for (double x : xs) {
    const double d = x - out.mean;
    ss.add(d * d);
  }
  const double var = ss.value() / static_cast<double>(n - 1);
  out.se = std::sqrt(var / static_cast<double>(n));
  return out;
}

}  // namespace pluginfdr
