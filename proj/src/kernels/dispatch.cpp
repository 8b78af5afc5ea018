#include <cstdlib>
#include <string_view>

#include "stackfed/kernels.hpp"

namespace stackfed::kernels {
namespace {

constexpr KernelTable kScalarTable{&scalar::split_scores, &scalar::add_into,
                                   &scalar::divide_by};
#if defined(STACKFED_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::split_scores, &avx2::add_into,
                                 &avx2::divide_by};
#endif

Isa detect() {
  if (const char* forced = std::getenv("STACKFED_SIMD")) {
    if (std::string_view(forced) == "scalar") return Isa::kScalar;
  }
  return available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(STACKFED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(STACKFED_HAVE_AVX2)
  if (isa == Isa::kAvx2 && available(Isa::kAvx2)) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

const KernelTable& active() { return table(active_isa()); }

}  // namespace stackfed::kernels
