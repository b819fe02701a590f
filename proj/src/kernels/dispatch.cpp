#include "sirlab/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace sirlab::kernels {

#if defined(SIRLAB_HAVE_AVX2_TU)
const KernelTable& avx2_table_unchecked();
#endif

const KernelTable* avx2_table() {
#if defined(SIRLAB_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return supported ? &avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = []() -> const KernelTable& {
        if (const char* env = std::getenv("SIRLAB_SIMD"); env && std::string_view(env) == "scalar")
            return scalar_table();
        if (const KernelTable* simd = avx2_table()) return *simd;
        return scalar_table();
    }();
    return chosen;
}

}  // namespace sirlab::kernels
