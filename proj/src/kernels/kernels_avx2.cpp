// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check (see dispatch.cpp).

#include "sirlab/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sirlab::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double hmax(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double hmin(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_min_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_min_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d vy = _mm256_loadu_pd(y + k);
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), vy));
    }
    for (; k < n; ++k) y[k] = std::fma(a, x[k], y[k]);
}

void lincomb(double* out, const double* x, double a, const double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d vx = _mm256_loadu_pd(x + k);
        _mm256_storeu_pd(out + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(y + k), vx));
    }
    for (; k < n; ++k) out[k] = std::fma(a, y[k], x[k]);
}

void scale(double* out, double a, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes)
        _mm256_storeu_pd(out + k, _mm256_mul_pd(va, _mm256_loadu_pd(x + k)));
    for (; k < n; ++k) out[k] = a * x[k];
}

void multiply(double* out, const double* x, std::size_t n) {
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes)
        _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(out + k), _mm256_loadu_pd(x + k)));
    for (; k < n; ++k) out[k] *= x[k];
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 2 * kLanes <= n; k += 2 * kLanes) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + kLanes), _mm256_loadu_pd(b + k + kLanes), acc1);
    }
    for (; k + kLanes <= n; k += kLanes)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) acc = std::fma(a[k], b[k], acc);
    return acc;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + k));
    double total = hsum(acc);
    for (; k < n; ++k) total += x[k];
    return total;
}

double max_abs(const double* x, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes)
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, _mm256_loadu_pd(x + k)));
    double m = hmax(acc);
    for (; k < n; ++k) m = std::max(m, std::fabs(x[k]));
    return m;
}

double min_value(const double* x, std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    __m256d acc = _mm256_set1_pd(inf);
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + k));
    double m = hmin(acc);
    for (; k < n; ++k) m = std::min(m, x[k]);
    return m;
}

void stencil3(double* out, const double* minus, const double* center, const double* plus,
              double scale_factor, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale_factor);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d outer = _mm256_add_pd(_mm256_loadu_pd(minus + k), _mm256_loadu_pd(plus + k));
        const __m256d diff = _mm256_fnmadd_pd(two, _mm256_loadu_pd(center + k), outer);
        _mm256_storeu_pd(out + k, _mm256_fmadd_pd(vs, diff, _mm256_loadu_pd(out + k)));
    }
    for (; k < n; ++k) out[k] += scale_factor * (minus[k] - 2.0 * center[k] + plus[k]);
}

void reaction(const ReactionBuffers& b, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d i_raw = _mm256_loadu_pd(b.i + k);
        const __m256d u = _mm256_max_pd(_mm256_loadu_pd(b.s + k), zero);
        const __m256d v = _mm256_max_pd(i_raw, zero);
        const __m256d w = _mm256_max_pd(_mm256_loadu_pd(b.r + k), zero);
        const __m256d denom = _mm256_add_pd(_mm256_add_pd(u, v), w);
        const __m256d positive = _mm256_cmp_pd(denom, zero, _CMP_GT_OQ);
        const __m256d g = _mm256_and_pd(positive, _mm256_div_pd(_mm256_mul_pd(u, v), denom));
        const __m256d infection = _mm256_mul_pd(_mm256_loadu_pd(b.beta + k), g);
        const __m256d recovery = _mm256_mul_pd(_mm256_loadu_pd(b.alpha + k), i_raw);
        _mm256_storeu_pd(b.ds + k, _mm256_sub_pd(_mm256_loadu_pd(b.ds + k), infection));
        _mm256_storeu_pd(b.di + k,
                         _mm256_add_pd(_mm256_loadu_pd(b.di + k), _mm256_sub_pd(infection, recovery)));
        _mm256_storeu_pd(b.dr + k, _mm256_add_pd(_mm256_loadu_pd(b.dr + k), recovery));
    }
    for (; k < n; ++k) {
        const double u = std::max(b.s[k], 0.0);
        const double v = std::max(b.i[k], 0.0);
        const double w = std::max(b.r[k], 0.0);
        const double denom = u + v + w;
        const double g = denom > 0.0 ? u * v / denom : 0.0;
        const double infection = b.beta[k] * g;
        const double recovery = b.alpha[k] * b.i[k];
        b.ds[k] -= infection;
        b.di[k] += infection - recovery;
        b.dr[k] += recovery;
    }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
    static const KernelTable table{"avx2", axpy,    lincomb,  scale,     multiply, dot,
                                   sum,    max_abs, min_value, stencil3, reaction};
    return table;
}

}  // namespace sirlab::kernels
