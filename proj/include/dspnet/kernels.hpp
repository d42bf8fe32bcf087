#pragma once

// Dense f64 inner-loop kernels. Every kernel has a scalar reference
// implementation and may have SIMD variants (AVX2/FMA on x86-64). The active
// variant is chosen once at startup from CPU features; kernels_force_scalar()
// pins the scalar path, which the equivalence tests use as the oracle.

#include <cstddef>
#include <string>

namespace dspnet::kernels {

struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // sum_i x[i] * y[i]
    double (*dot)(std::size_t n, const double* x, const double* y);
    // out[i] = x[i] + y[i]
    void (*add)(std::size_t n, const double* x, const double* y, double* out);
    // out[i] = x[i] * y[i]
    void (*mul)(std::size_t n, const double* x, const double* y, double* out);
    // x[i] *= a
    void (*scale)(std::size_t n, double a, double* x);
    // sum_i x[i]
    double (*sum)(std::size_t n, const double* x);
    // C[m x p] += A[m x n] * B[n x p], all row-major
    void (*matmul_acc)(std::size_t m, std::size_t n, std::size_t p,
                       const double* a, const double* b, double* c);
};

// Active kernel table (scalar or AVX2 depending on the host CPU).
const Ops& active();

// Scalar reference table, always available.
const Ops& scalar();

// AVX2 table, or nullptr when the binary/CPU lacks support.
const Ops* avx2();

// Name of the active variant ("scalar" or "avx2").
const std::string& active_name();

// Force the scalar path for the rest of the process (testing hook).
void force_scalar();

}  // namespace dspnet::kernels
