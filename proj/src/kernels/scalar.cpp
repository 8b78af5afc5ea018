#include <cstddef>

#include "stackfed/kernels.hpp"

namespace stackfed::kernels::scalar {

void split_scores(std::span<const double> left0, std::span<const double> left1,
                  double total0, double total1, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double l0 = left0[i];
    const double l1 = left1[i];
    const double r0 = total0 - l0;
    const double r1 = total1 - l1;
    const double left = (l0 * l0 + l1 * l1) / (l0 + l1);
    const double right = (r0 * r0 + r1 * r1) / (r0 + r1);
    out[i] = left + right;
  }
}

void add_into(std::span<double> acc, std::span<const double> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

void divide_by(std::span<double> x, double divisor) {
  for (double& v : x) v /= divisor;
}

}  // namespace stackfed::kernels::scalar
