#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace stackfed {

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a over a purpose tag; combined with integer keys by derive_seed.
std::uint64_t hash_tag(std::string_view tag);

// Mixes a parent seed with a purpose tag and an integer key tuple. Every
// stochastic step in the pipeline draws from a generator seeded this way, so
// any single work cell can be recomputed without replaying the others.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::uint64_t> keys = {});

// xoshiro256** with splitmix64 seeding. All distributions below are
// implemented here rather than through <random> distributions, whose outputs
// are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }
  std::uint64_t next();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();
  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  // Box-Muller; the second variate is cached.
  double normal();
  // log of a Gamma(shape, 1) draw (Marsaglia-Tsang, with the u^(1/a) boost
  // for shape < 1). Working in log space keeps tiny shapes from underflowing.
  double log_gamma_variate(double shape);
  double gamma(double shape);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = static_cast<decltype(i)>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stackfed
