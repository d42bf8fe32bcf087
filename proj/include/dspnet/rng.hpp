#pragma once

// Deterministic RNG. Distributions are implemented by hand so that a seed
// yields the same stream on every standard library / platform; std::
// distribution objects make no such guarantee.

#include <cmath>
#include <cstdint>
#include <vector>

namespace dspnet {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed)) {}

    // Derive an independent stream, e.g. per user or per (epoch, example).
    Rng fork(std::uint64_t key) const {
        return Rng(state_ ^ (0x9e3779b97f4a7c15ULL + splitmix(key)));
    }

    std::uint64_t next_u64() {
        // xorshift64* over a splitmix-seeded state
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // Uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n)
    std::uint64_t uniform(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (one value per call, no caching so the
    // stream position is a pure function of call count).
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double laplace() {
        const double u = next_double() - 0.5;
        const double a = u >= 0.0 ? 1.0 : -1.0;
        double t = 1.0 - 2.0 * std::abs(u);
        if (t <= 0.0) t = 0x1.0p-53;
        return -a * std::log(t);
    }

    // Fisher-Yates over [first, last)
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[uniform(i)]);
        }
    }

    // k distinct indices from [0, n), order by draw
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  private:
    std::uint64_t state_;

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
};

inline std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx.begin(), idx.end());
    idx.resize(k < n ? k : n);
    return idx;
}

}  // namespace dspnet
