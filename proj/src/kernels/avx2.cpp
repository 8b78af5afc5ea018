#include <immintrin.h>

#include <cstddef>

#include "stackfed/kernels.hpp"

namespace stackfed::kernels::avx2 {

void split_scores(std::span<const double> left0, std::span<const double> left1,
                  double total0, double total1, std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d t0 = _mm256_set1_pd(total0);
  const __m256d t1 = _mm256_set1_pd(total1);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d l0 = _mm256_loadu_pd(left0.data() + i);
    const __m256d l1 = _mm256_loadu_pd(left1.data() + i);
    const __m256d r0 = _mm256_sub_pd(t0, l0);
    const __m256d r1 = _mm256_sub_pd(t1, l1);
    const __m256d left = _mm256_div_pd(
        _mm256_add_pd(_mm256_mul_pd(l0, l0), _mm256_mul_pd(l1, l1)),
        _mm256_add_pd(l0, l1));
    const __m256d right = _mm256_div_pd(
        _mm256_add_pd(_mm256_mul_pd(r0, r0), _mm256_mul_pd(r1, r1)),
        _mm256_add_pd(r0, r1));
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(left, right));
  }
  if (i < n) {
    scalar::split_scores(left0.subspan(i), left1.subspan(i), total0, total1,
                         out.subspan(i));
  }
}

void add_into(std::span<double> acc, std::span<const double> x) {
  const std::size_t n = acc.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(acc.data() + i);
    const __m256d b = _mm256_loadu_pd(x.data() + i);
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(a, b));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void divide_by(std::span<double> x, double divisor) {
  const std::size_t n = x.size();
  const __m256d d = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x.data() + i,
                     _mm256_div_pd(_mm256_loadu_pd(x.data() + i), d));
  }
  for (; i < n; ++i) x[i] /= divisor;
}

}  // namespace stackfed::kernels::avx2
