// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "nlobs/simd/kernels.hpp"

namespace nlobs::simd {

namespace {

// Cephes-style exp/log on four lanes. Inputs to vlog are finite and > 0;
// subnormals are not handled (callers blend d == 0 separately).

inline __m256d polevl(__m256d x, const double* c, int degree) {
    __m256d y = _mm256_set1_pd(c[0]);
    for (int k = 1; k <= degree; ++k) y = _mm256_fmadd_pd(y, x, _mm256_set1_pd(c[k]));
    return y;
}

inline __m256d p1evl(__m256d x, const double* c, int degree) {
    __m256d y = _mm256_add_pd(x, _mm256_set1_pd(c[0]));
    for (int k = 1; k < degree; ++k) y = _mm256_fmadd_pd(y, x, _mm256_set1_pd(c[k]));
    return y;
}

constexpr double kLogP[] = {1.01875663804580931796E-4, 4.97494994976747001425E-1,
                            4.70579119878881725854E0,  1.44989225341610930846E1,
                            1.79368678507819816313E1,  7.70838733755885391666E0};
constexpr double kLogQ[] = {1.12873587189167450590E1, 4.52279145837532221105E1,
                            8.29875266912776603211E1, 7.11544750618563894466E1,
                            2.31251620126765340583E1};
constexpr double kExpP[] = {1.26177193074810590878E-4, 3.02994407707441961300E-2,
                            9.99999999999999999910E-1};
constexpr double kExpQ[] = {3.00198505138664455042E-6, 2.52448340349684104192E-3,
                            2.27265548208155028766E-1, 2.00000000000000000009E0};

// 1.5 * 2^52: adding it to an integral double in (-2^51, 2^51) leaves the
// integer in the low mantissa bits.
constexpr double kMagic = 6755399441055744.0;

inline __m256d int64_to_double(__m256i e) {
    const __m256d magic = _mm256_set1_pd(kMagic);
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(e, _mm256_castpd_si256(magic))), magic);
}

inline __m256i double_to_int64(__m256d n) {
    const __m256d magic = _mm256_set1_pd(kMagic);
    return _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
}

inline __m256d vlog(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i exp_bits = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7ff));
    __m256d e = int64_to_double(_mm256_sub_epi64(exp_bits, _mm256_set1_epi64x(1022)));
    // Mantissa rescaled into [0.5, 1).
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
        _mm256_set1_epi64x(0x3fe0000000000000LL)));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d small = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OQ);
    e = _mm256_sub_pd(e, _mm256_and_pd(small, one));
    m = _mm256_sub_pd(_mm256_add_pd(m, _mm256_and_pd(small, m)), one);

    const __m256d z = _mm256_mul_pd(m, m);
    __m256d y = _mm256_div_pd(_mm256_mul_pd(z, polevl(m, kLogP, 5)), p1evl(m, kLogQ, 5));
    y = _mm256_mul_pd(m, y);
    y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
    y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
    __m256d r = _mm256_add_pd(m, y);
    return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), r);
}

inline __m256d vexp(__m256d x) {
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), x);
    const __m256d xx = _mm256_mul_pd(x, x);
    const __m256d px = _mm256_mul_pd(x, polevl(xx, kExpP, 2));
    const __m256d qx = polevl(xx, kExpQ, 3);
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));
    const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(double_to_int64(n), _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(scale));
}

inline __m256d vabs(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

// Fixed reduction order: ((l0 + l1) + (l2 + l3)).
inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double l_sum(const double* w, const double* v, std::size_t n, double t, double p) {
    const __m256d tv = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    double tail = 0.0;
    if (p == 2.0) {
        for (; k + 4 <= n; k += 4) {
            const __m256d d = _mm256_sub_pd(tv, _mm256_loadu_pd(v + k));
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), d, acc);
        }
        for (; k < n; ++k) tail += w[k] * (t - v[k]);
        return hsum(acc) + tail;
    }
    const __m256d q = _mm256_set1_pd(p - 1.0);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d zero = _mm256_setzero_pd();
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(tv, _mm256_loadu_pd(v + k));
        const __m256d ad = vabs(d);
        const __m256d is_zero = _mm256_cmp_pd(ad, zero, _CMP_EQ_OQ);
        const __m256d safe = _mm256_blendv_pd(ad, _mm256_set1_pd(1.0), is_zero);
        __m256d pw = vexp(_mm256_mul_pd(q, vlog(safe)));
        pw = _mm256_or_pd(pw, _mm256_and_pd(d, sign_mask));
        pw = _mm256_blendv_pd(pw, zero, is_zero);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), pw, acc);
    }
    for (; k < n; ++k) {
        const double d = t - v[k];
        if (d != 0.0) tail += w[k] * std::copysign(std::pow(std::fabs(d), p - 1.0), d);
    }
    return hsum(acc) + tail;
}

ValueSlope l_sum_slope(const double* w, const double* v, std::size_t n, double t, double p) {
    const __m256d tv = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    __m256d sacc = _mm256_setzero_pd();
    std::size_t k = 0;
    double tail = 0.0, stail = 0.0;
    if (p == 2.0) {
        for (; k + 4 <= n; k += 4) {
            const __m256d wk = _mm256_loadu_pd(w + k);
            const __m256d d = _mm256_sub_pd(tv, _mm256_loadu_pd(v + k));
            acc = _mm256_fmadd_pd(wk, d, acc);
            sacc = _mm256_add_pd(sacc, wk);
        }
        for (; k < n; ++k) {
            tail += w[k] * (t - v[k]);
            stail += w[k];
        }
        return {hsum(acc) + tail, hsum(sacc) + stail};
    }
    const double qs = p - 1.0;
    const __m256d q = _mm256_set1_pd(qs);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d zero_slope = _mm256_set1_pd(p < 2.0 ? std::numeric_limits<double>::infinity() : 0.0);
    for (; k + 4 <= n; k += 4) {
        const __m256d wk = _mm256_loadu_pd(w + k);
        const __m256d d = _mm256_sub_pd(tv, _mm256_loadu_pd(v + k));
        const __m256d ad = vabs(d);
        const __m256d is_zero = _mm256_cmp_pd(ad, zero, _CMP_EQ_OQ);
        const __m256d safe = _mm256_blendv_pd(ad, _mm256_set1_pd(1.0), is_zero);
        const __m256d pw = vexp(_mm256_mul_pd(q, vlog(safe)));
        __m256d sv = _mm256_or_pd(pw, _mm256_and_pd(d, sign_mask));
        sv = _mm256_blendv_pd(sv, zero, is_zero);
        acc = _mm256_fmadd_pd(wk, sv, acc);
        __m256d sl = _mm256_mul_pd(wk, _mm256_mul_pd(q, _mm256_div_pd(pw, safe)));
        const __m256d w_pos = _mm256_cmp_pd(wk, zero, _CMP_GT_OQ);
        const __m256d at_zero = _mm256_and_pd(zero_slope, w_pos);
        sl = _mm256_blendv_pd(sl, at_zero, is_zero);
        sacc = _mm256_add_pd(sacc, sl);
    }
    for (; k < n; ++k) {
        const double d = t - v[k];
        if (d == 0.0) {
            if (w[k] > 0.0 && p < 2.0) stail = std::numeric_limits<double>::infinity();
            continue;
        }
        const double ad = std::fabs(d);
        const double pw = std::pow(ad, qs);
        tail += w[k] * std::copysign(pw, d);
        stail += w[k] * qs * (pw / ad);
    }
    return {hsum(acc) + tail, hsum(sacc) + stail};
}

double abs_pow_sum(const double* w, const double* v, std::size_t n, double t, double p) {
    const __m256d tv = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    double tail = 0.0;
    if (p == 2.0) {
        for (; k + 4 <= n; k += 4) {
            const __m256d d = _mm256_sub_pd(tv, _mm256_loadu_pd(v + k));
            acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + k), d), d, acc);
        }
        for (; k < n; ++k) {
            const double d = t - v[k];
            tail += w[k] * d * d;
        }
        return hsum(acc) + tail;
    }
    const __m256d pv = _mm256_set1_pd(p);
    const __m256d zero = _mm256_setzero_pd();
    for (; k + 4 <= n; k += 4) {
        const __m256d ad = vabs(_mm256_sub_pd(tv, _mm256_loadu_pd(v + k)));
        const __m256d is_zero = _mm256_cmp_pd(ad, zero, _CMP_EQ_OQ);
        const __m256d safe = _mm256_blendv_pd(ad, _mm256_set1_pd(1.0), is_zero);
        __m256d pw = vexp(_mm256_mul_pd(pv, vlog(safe)));
        pw = _mm256_blendv_pd(pw, zero, is_zero);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), pw, acc);
    }
    for (; k < n; ++k) {
        const double d = t - v[k];
        if (d != 0.0) tail += w[k] * std::pow(std::fabs(d), p);
    }
    return hsum(acc) + tail;
}

constexpr KernelTable kAvx2{"avx2", &l_sum, &l_sum_slope, &abs_pow_sum};

}  // namespace

const KernelTable* avx2_table_unchecked() noexcept { return &kAvx2; }

}  // namespace nlobs::simd
