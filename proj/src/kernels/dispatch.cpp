#include <cstdlib>
#include <string_view>

#include "permreg/kernels.hpp"

namespace permreg::kernels {

#if defined(PERMREG_WITH_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(PERMREG_WITH_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable* chosen = [] {
    const char* forced = std::getenv("PERMREG_KERNELS");
    if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
    if (const KernelTable* simd = avx2_kernels()) return simd;
    return &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace permreg::kernels
