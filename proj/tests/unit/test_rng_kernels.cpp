#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "stackfed/kernels.hpp"
#include "stackfed/rng.hpp"

using namespace stackfed;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
}

TEST_CASE("derive_seed separates tags and keys") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 50; ++k) {
    seen.insert(derive_seed(7, "split", {k}));
    seen.insert(derive_seed(7, "public", {k}));
    seen.insert(derive_seed(7, "split", {k, 0}));
  }
  CHECK(seen.size() == 150);
  CHECK(derive_seed(7, "split", {1, 2}) != derive_seed(7, "split", {2, 1}));
  CHECK(derive_seed(7, "split", {3}) == derive_seed(7, "split", {3}));
}

TEST_CASE("uniform draws stay in range with the right mean") {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_open();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below is unbiased over a small range") {
  Rng rng(9);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[rng.below(6)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(3);
  double s = 0.0;
  double ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.02);
}

TEST_CASE("gamma draws match shape moments") {
  for (double shape : {0.05, 0.5, 1.0, 3.0, 50.0}) {
    Rng rng(11);
    const int n = 100000;
    double s = 0.0;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      REQUIRE(g >= 0.0);
      s += g;
      ss += g * g;
    }
    const double mean = s / n;
    const double var = ss / n - mean * mean;
    CAPTURE(shape);
    CHECK(mean == doctest::Approx(shape).epsilon(0.03));
    CHECK(var == doctest::Approx(shape).epsilon(0.08));
  }
}

TEST_CASE("log gamma variate stays finite for tiny shapes") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) CHECK(std::isfinite(rng.log_gamma_variate(1e-4)));
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(2);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  rng.shuffle(v.begin(), v.end());
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 100);
}

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar and AVX2 kernels agree bit for bit") {
  if (!kernels::available(kernels::Isa::kAvx2)) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  const auto& s = kernels::table(kernels::Isa::kScalar);
  const auto& v = kernels::table(kernels::Isa::kAvx2);
  Rng rng(17);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 1000u}) {
    CAPTURE(n);
    const double t0 = 500.0;
    const double t1 = 377.0;
    std::vector<double> l0(n);
    std::vector<double> l1(n);
    for (std::size_t i = 0; i < n; ++i) {
      l0[i] = static_cast<double>(rng.below(500));
      l1[i] = static_cast<double>(rng.below(377));
      if (l0[i] + l1[i] == 0.0) l0[i] = 1.0;
      if (l0[i] == t0 && l1[i] == t1) l1[i] -= 1.0;
    }
    std::vector<double> a(n);
    std::vector<double> b(n);
    s.split_scores(l0, l1, t0, t1, a);
    v.split_scores(l0, l1, t0, t1, b);
    CHECK(same_bits(a, b));

    std::vector<double> acc_a(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      acc_a[i] = rng.uniform();
      x[i] = rng.uniform();
    }
    std::vector<double> acc_b = acc_a;
    s.add_into(acc_a, x);
    v.add_into(acc_b, x);
    CHECK(same_bits(acc_a, acc_b));
    s.divide_by(acc_a, 7.0);
    v.divide_by(acc_b, 7.0);
    CHECK(same_bits(acc_a, acc_b));
  }
}

TEST_CASE("split score kernel matches the Gini proxy formula") {
  const auto& s = kernels::table(kernels::Isa::kScalar);
  const std::vector<double> l0{1, 3, 0};
  const std::vector<double> l1{0, 1, 2};
  std::vector<double> out(3);
  s.split_scores(l0, l1, 4.0, 3.0, out);
  CHECK(out[0] == doctest::Approx(1.0 + (9.0 + 9.0) / 6.0));
  CHECK(out[1] == doctest::Approx((9.0 + 1.0) / 4.0 + (1.0 + 4.0) / 3.0));
  CHECK(out[2] == doctest::Approx(2.0 + 16.0 / 5.0 + 1.0 / 5.0));
}
