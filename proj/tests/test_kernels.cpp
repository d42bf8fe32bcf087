#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dspnet/kernels.hpp"
#include "dspnet/rng.hpp"

using namespace dspnet;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive references") {
    Rng rng(1);
    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 17u, 64u, 100u}) {
        auto x = randvec(rng, n);
        auto y = randvec(rng, n);

        double dot_ref = 0.0, sum_ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dot_ref += x[i] * y[i];
            sum_ref += x[i];
        }
        CHECK(kernels::scalar().dot(n, x.data(), y.data()) == doctest::Approx(dot_ref).epsilon(1e-12));
        CHECK(kernels::scalar().sum(n, x.data()) == doctest::Approx(sum_ref).epsilon(1e-12));

        auto out = randvec(rng, n);
        auto saved = out;
        kernels::scalar().axpy(n, 1.5, x.data(), out.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(saved[i] + 1.5 * x[i]));

        kernels::scalar().add(n, x.data(), y.data(), out.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == x[i] + y[i]);

        kernels::scalar().mul(n, x.data(), y.data(), out.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == x[i] * y[i]);

        auto z = x;
        kernels::scalar().scale(n, -0.25, z.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == x[i] * -0.25);
    }
}

TEST_CASE("scalar matmul_acc matches triple loop") {
    Rng rng(2);
    for (auto [m, n, p] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                           {2, 3, 4}, {5, 7, 3}, {8, 8, 8}, {3, 16, 2}}) {
        auto a = randvec(rng, m * n);
        auto b = randvec(rng, n * p);
        std::vector<double> c(m * p, 0.5);
        auto ref = c;
        kernels::scalar().matmul_acc(m, n, p, a.data(), b.data(), c.data());
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                double acc = ref[i * p + j];
                for (std::size_t k = 0; k < n; ++k) acc += a[i * n + k] * b[k * p + j];
                CHECK(c[i * p + j] == doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("avx2 variants agree with scalar") {
    const kernels::Ops* simd = kernels::avx2();
    if (simd == nullptr) {
        MESSAGE("no AVX2 on this host; equivalence vacuously skipped");
        return;
    }
    Rng rng(3);
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 13u, 16u, 31u, 64u, 257u}) {
        auto x = randvec(rng, n);
        auto y = randvec(rng, n);

        // dot/sum accumulate in a different association order; allow 1-ulp-ish slack
        CHECK(simd->dot(n, x.data(), y.data()) ==
              doctest::Approx(kernels::scalar().dot(n, x.data(), y.data())).epsilon(1e-13));
        CHECK(simd->sum(n, x.data()) ==
              doctest::Approx(kernels::scalar().sum(n, x.data())).epsilon(1e-13));

        std::vector<double> a(n, 0.0), b(n, 0.0);
        kernels::scalar().add(n, x.data(), y.data(), a.data());
        simd->add(n, x.data(), y.data(), b.data());
        CHECK(a == b);  // elementwise ops must agree bit-for-bit

        kernels::scalar().mul(n, x.data(), y.data(), a.data());
        simd->mul(n, x.data(), y.data(), b.data());
        CHECK(a == b);

        auto s1 = x, s2 = x;
        kernels::scalar().scale(n, 1.7, s1.data());
        simd->scale(n, 1.7, s2.data());
        CHECK(s1 == s2);
    }
}

TEST_CASE("avx2 matmul_acc agrees with scalar within accumulation tolerance") {
    const kernels::Ops* simd = kernels::avx2();
    if (simd == nullptr) return;
    Rng rng(4);
    for (auto [m, n, p] : {std::tuple<std::size_t, std::size_t, std::size_t>{2, 3, 5},
                           {4, 4, 4}, {7, 9, 11}, {16, 16, 16}, {1, 32, 1}}) {
        auto a = std::vector<double>(m * n);
        auto b = std::vector<double>(n * p);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        std::vector<double> c1(m * p, 0.0), c2(m * p, 0.0);
        kernels::scalar().matmul_acc(m, n, p, a.data(), b.data(), c1.data());
        simd->matmul_acc(m, n, p, a.data(), b.data(), c2.data());
        for (std::size_t i = 0; i < m * p; ++i) {
            CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("active table reports a known variant") {
    const std::string& name = kernels::active_name();
    CHECK((name == "scalar" || name == "avx2"));
}

// Keep last: force_scalar pins the dispatch for the rest of the process.
TEST_CASE("force_scalar pins the scalar path") {
    dspnet::kernels::force_scalar();
    CHECK(dspnet::kernels::active_name() == "scalar");
    CHECK(dspnet::kernels::active().dot == dspnet::kernels::scalar().dot);
}
