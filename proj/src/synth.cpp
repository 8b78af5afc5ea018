#include "stackfed/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "stackfed/rng.hpp"

namespace stackfed {
namespace {

constexpr std::size_t kNumeric = 10;

constexpr std::array<double, kNumeric> kScale0{2.0, 1.6, 1.3, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
constexpr std::array<double, kNumeric> kScale1{0.6, 0.7, 0.9, 1.0, 1.2, 1.4, 1.1, 1.6, 0.8, 1.8};
constexpr std::array<double, kNumeric> kShift1{0.7, -0.6, 0.5, 0.4, -0.4, 0.3, 0.0, 0.2, 0.3, -0.2};

constexpr std::array<double, 4> kCat0Class0{0.4, 0.3, 0.2, 0.1};
constexpr std::array<double, 4> kCat0Class1{0.15, 0.2, 0.3, 0.35};
constexpr std::array<double, 3> kCat1Class0{0.5, 0.3, 0.2};
constexpr std::array<double, 3> kCat1Class1{0.3, 0.3, 0.4};

constexpr double kPositiveRate = 0.4;

template <std::size_t N>
std::uint32_t draw_category(const std::array<double, N>& probs, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < N; ++k) {
    if (u < probs[k]) return static_cast<std::uint32_t>(k);
    u -= probs[k];
  }
  return static_cast<std::uint32_t>(N - 1);
}

// Rotates consecutive coordinate pairs so the class boundary is oblique to
// every axis.
void mix(std::array<double, kNumeric>& z) {
  const double c = std::cos(std::numbers::pi / 6.0);
  const double s = std::sin(std::numbers::pi / 6.0);
  for (std::size_t i = 0; i + 1 < kNumeric; i += 2) {
    const double a = z[i];
    const double b = z[i + 1];
    z[i] = c * a - s * b;
    z[i + 1] = s * a + c * b;
  }
  for (std::size_t i = 1; i + 1 < kNumeric; i += 2) {
    const double a = z[i];
    const double b = z[i + 1];
    z[i] = c * a + s * b;
    z[i + 1] = -s * a + c * b;
  }
}

}  // namespace

Dataset synthetic_dataset(std::size_t rows, std::uint64_t seed) {
  std::vector<FeatureSpec> features;
  for (std::size_t i = 0; i < kNumeric; ++i) {
    features.push_back({"x" + std::to_string(i), FeatureKind::kNumeric, {}});
  }
  features.push_back({"c0", FeatureKind::kCategorical, {"a", "b", "c", "d"}});
  features.push_back({"c1", FeatureKind::kCategorical, {"u", "v", "w"}});

  std::vector<RawColumn> columns(kNumeric + 2);
  for (std::size_t i = 0; i < kNumeric; ++i) columns[i].numeric.resize(rows);
  columns[kNumeric].codes.resize(rows);
  columns[kNumeric + 1].codes.resize(rows);
  std::vector<int> labels(rows);

  Rng rng(derive_seed(seed, "synthetic"));
  std::array<double, kNumeric> z{};
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = rng.uniform() < kPositiveRate ? 1 : 0;
    labels[r] = y;
    for (std::size_t i = 0; i < kNumeric; ++i) {
      z[i] = rng.normal() * (y == 1 ? kScale1[i] : kScale0[i]);
    }
    mix(z);
    for (std::size_t i = 0; i < kNumeric; ++i) {
      columns[i].numeric[r] = z[i] + (y == 1 ? kShift1[i] : 0.0);
    }
    columns[kNumeric].codes[r] = y == 1 ? draw_category(kCat0Class1, rng) : draw_category(kCat0Class0, rng);
    columns[kNumeric + 1].codes[r] =
        y == 1 ? draw_category(kCat1Class1, rng) : draw_category(kCat1Class0, rng);
  }
  return Dataset(Schema(std::move(features), "y"), std::move(columns), std::move(labels),
                 {"0", "1"});
}

}  // namespace stackfed
