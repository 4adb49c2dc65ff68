// Small numerical helpers: normal tail probabilities and order-fixed
// compensated summation.
#pragma once

#include <cstddef>
#include <span>

namespace mrld {

inline constexpr double kNormal975 = 1.959963984540054;

// Two-sided p-value of a standard normal statistic.
double two_sided_p(double z);

// Neumaier-compensated accumulator. Summation order is the caller's order, so
// feeding values in iteration order gives scheduling-independent results.
class CompensatedSum {
 public:
  void add(double value);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double compensated_sum(std::span<const double> values);

}  // namespace mrld
