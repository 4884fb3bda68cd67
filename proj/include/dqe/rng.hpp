#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dqe {

// splitmix64, used for seed expansion and sub-stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ generator. Self-contained so that trajectories do not depend
// on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Marsaglia's polar method. No spare is cached, so
    // every call consumes a self-contained chunk of the stream.
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // Unbiased integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r < limit) return r % n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

// Sub-stream identifiers. Graph construction, data generation and each
// ensemble realization draw from independent streams derived from one
// master seed, so reruns reproduce bit-for-bit regardless of execution
// order.
enum class StreamKind : std::uint64_t {
    graph = 1,
    data = 2,
    run = 3,
};

inline std::uint64_t derive_seed(std::uint64_t master, StreamKind kind,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master ^ (static_cast<std::uint64_t>(kind) << 56);
    s += 0x9e3779b97f4a7c15ULL * (index + 1);
    return splitmix64_next(s);
}

}  // namespace dqe
