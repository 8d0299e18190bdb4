#include <cmath>
#include <limits>

#include "nlobs/simd/kernels.hpp"

namespace nlobs::simd {

namespace {

double l_sum(const double* w, const double* v, std::size_t n, double t, double p) {
    double acc = 0.0;
    if (p == 2.0) {
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * (t - v[k]);
        return acc;
    }
    const double q = p - 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = t - v[k];
        if (d == 0.0) continue;
        acc += w[k] * std::copysign(std::pow(std::fabs(d), q), d);
    }
    return acc;
}

ValueSlope l_sum_slope(const double* w, const double* v, std::size_t n, double t, double p) {
    double val = 0.0, slope = 0.0;
    if (p == 2.0) {
        for (std::size_t k = 0; k < n; ++k) {
            val += w[k] * (t - v[k]);
            slope += w[k];
        }
        return {val, slope};
    }
    const double q = p - 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = t - v[k];
        if (d == 0.0) {
            if (w[k] > 0.0 && p < 2.0) slope = std::numeric_limits<double>::infinity();
            continue;
        }
        const double ad = std::fabs(d);
        const double pw = std::pow(ad, q);
        val += w[k] * std::copysign(pw, d);
        slope += w[k] * q * (pw / ad);
    }
    return {val, slope};
}

double abs_pow_sum(const double* w, const double* v, std::size_t n, double t, double p) {
    double acc = 0.0;
    if (p == 2.0) {
        for (std::size_t k = 0; k < n; ++k) {
            const double d = t - v[k];
            acc += w[k] * d * d;
        }
        return acc;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double d = t - v[k];
        if (d == 0.0) continue;
        acc += w[k] * std::pow(std::fabs(d), p);
    }
    return acc;
}

constexpr KernelTable kScalar{"scalar", &l_sum, &l_sum_slope, &abs_pow_sum};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace nlobs::simd
