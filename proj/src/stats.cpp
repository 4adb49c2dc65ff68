#include "mrld/stats.hpp"

#include <cmath>

namespace mrld {

double two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

void CompensatedSum::add(double value) {
  const double t = sum_ + value;
  if (std::fabs(sum_) >= std::fabs(value)) {
    compensation_ += (sum_ - t) + value;
  } else {
    compensation_ += (value - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace mrld
