#pragma once

#include <cstddef>
#include <string_view>

namespace nlobs::simd {

struct ValueSlope {
    double value;
    double slope;
};

/// Row reductions of the Gauss-Seidel hot loop. Every variant must agree with
/// the scalar reference to 1e-12 relative to the sum of absolute terms.
/// Entries with d = t - v_k == 0 contribute exactly 0 to value; to slope they
/// contribute +inf for p < 2 when w_k > 0, and 0 when w_k == 0.
struct KernelTable {
    const char* name;
    /// Σ w_k L(t, v_k).
    double (*weighted_l_sum)(const double* w, const double* v, std::size_t n, double t, double p);
    /// Σ w_k L(t, v_k) and its t-derivative Σ w_k (p-1)|t - v_k|^{p-2}.
    ValueSlope (*weighted_l_sum_slope)(const double* w, const double* v, std::size_t n, double t,
                                       double p);
    /// Σ w_k |t - v_k|^p.
    double (*weighted_abs_pow_sum)(const double* w, const double* v, std::size_t n, double t,
                                   double p);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the AVX2/FMA variant was not built or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;

/// Chosen once per process: NLOBS_SIMD=scalar|avx2|auto (default auto).
const KernelTable& active_kernels() noexcept;

/// Lookup by name ("scalar", "avx2"); nullptr when unavailable.
const KernelTable* kernels_by_name(std::string_view name) noexcept;

}  // namespace nlobs::simd
