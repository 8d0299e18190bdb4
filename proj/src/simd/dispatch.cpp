#include <cstdlib>
#include <string_view>

#include "nlobs/simd/kernels.hpp"

namespace nlobs::simd {

#if defined(NLOBS_HAVE_AVX2)
const KernelTable* avx2_table_unchecked() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(NLOBS_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* kernels_by_name(std::string_view name) noexcept {
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2") return avx2_kernels();
    return nullptr;
}

const KernelTable& active_kernels() noexcept {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("NLOBS_SIMD");
        const std::string_view want = env ? env : "auto";
        if (want == "scalar") return scalar_kernels();
        if (const KernelTable* k = avx2_kernels()) return *k;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace nlobs::simd
