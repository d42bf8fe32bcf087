#include "dspnet/kernels.hpp"

namespace dspnet::kernels {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void add_scalar(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul_scalar_(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_scalar(std::size_t n, const double* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

// Row-major ikj loop so the inner update is an axpy over a row of B.
void matmul_acc_scalar(std::size_t m, std::size_t n, std::size_t p,
                       const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            const double* brow = b + k * p;
            double* crow = c + i * p;
            for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
        }
    }
}

const Ops kScalarOps = {
    axpy_scalar, dot_scalar, add_scalar, mul_scalar_,
    scale_scalar, sum_scalar, matmul_acc_scalar,
};

}  // namespace

const Ops& scalar() { return kScalarOps; }

}  // namespace dspnet::kernels
