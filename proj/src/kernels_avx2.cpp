// AVX2/FMA kernel variants. Compiled with -mavx2 -mfma in its own TU; the
// dispatcher only hands these out when the running CPU reports AVX2.

#include "dspnet/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define DSPNET_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define DSPNET_HAVE_AVX2_TU 0
#endif

namespace dspnet::kernels {

#if DSPNET_HAVE_AVX2_TU
namespace {

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return hsum(acc) + tail;
}

void add_avx2(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul_avx2(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

double sum_avx2(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

void matmul_acc_avx2(std::size_t m, std::size_t n, std::size_t p,
                     const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            axpy_avx2(p, a[i * n + k], b + k * p, c + i * p);
        }
    }
}

const Ops kAvx2Ops = {
    axpy_avx2, dot_avx2, add_avx2, mul_avx2,
    scale_avx2, sum_avx2, matmul_acc_avx2,
};

}  // namespace

const Ops* avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")
               ? &kAvx2Ops
               : nullptr;
}
#else
const Ops* avx2() { return nullptr; }
#endif

}  // namespace dspnet::kernels
