#include <cstdlib>
#include <string_view>

#include "entrosense/kernels.hpp"
#include "kernels_impl.hpp"

namespace entrosense::kernels {

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &scalar::pairwise_distances,
                                 &scalar::sqexp_correlation, &scalar::weighted_gram,
                                 &scalar::row_dot};
  return table;
}

const KernelTable* avx2_table() {
#if defined(ENTROSENSE_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  static const KernelTable table{"avx2", &avx2::pairwise_distances, &avx2::sqexp_correlation,
                                 &avx2::weighted_gram, &avx2::row_dot};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("ENTROSENSE_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace entrosense::kernels
