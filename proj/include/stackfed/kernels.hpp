#pragma once

#include <span>
#include <string_view>

// Data-parallel inner loops used by the forest. Each kernel has a scalar
// reference and an AVX2 variant; the AVX2 variants perform the same IEEE
// operations in the same order per lane (no FMA contraction), so both produce
// bit-identical results and the choice never affects experiment output.
namespace stackfed::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  // Gini split proxy for every candidate boundary i:
  //   (l0^2 + l1^2) / (l0 + l1) + (r0^2 + r1^2) / (r0 + r1),  r = total - l.
  // Both sides must be non-empty.
  void (*split_scores)(std::span<const double> left0,
                       std::span<const double> left1, double total0,
                       double total1, std::span<double> out);
  // acc[i] += x[i]
  void (*add_into)(std::span<double> acc, std::span<const double> x);
  // x[i] /= divisor
  void (*divide_by)(std::span<double> x, double divisor);
};

bool available(Isa isa);
const KernelTable& table(Isa isa);

// Best available ISA, unless STACKFED_SIMD=scalar forces the reference path.
Isa active_isa();
const KernelTable& active();

namespace scalar {
void split_scores(std::span<const double> left0, std::span<const double> left1,
                  double total0, double total1, std::span<double> out);
void add_into(std::span<double> acc, std::span<const double> x);
void divide_by(std::span<double> x, double divisor);
}  // namespace scalar

#if defined(STACKFED_HAVE_AVX2)
namespace avx2 {
void split_scores(std::span<const double> left0, std::span<const double> left1,
                  double total0, double total1, std::span<double> out);
void add_into(std::span<double> acc, std::span<const double> x);
void divide_by(std::span<double> x, double divisor);
}  // namespace avx2
#endif

}  // namespace stackfed::kernels
