#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fracgamma::detail {

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// log(sum_k exp(logs[k])) with the maximum factored out; residual terms are
/// summed in descending order. Returns -inf for an empty input. `logs` is
/// reordered in place.
inline double log_sum_exp(std::vector<double>& logs) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (logs.empty()) return neg_inf;
  std::sort(logs.begin(), logs.end(), std::greater<>());
  const double top = logs.front();
  if (top == neg_inf) return neg_inf;
  CompensatedSum acc;
  for (double l : logs) acc.add(std::exp(l - top));
  return top + std::log(acc.value());
}

}  // namespace fracgamma::detail
