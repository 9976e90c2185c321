#pragma once

#include <cmath>
#include <cstdint>

namespace ednig {

// splitmix64 generator. Used everywhere a seed matters so that results are
// reproducible across platforms and standard library versions
// (std::uniform_real_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        // Box-Muller, one value per call.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Stable sub-seed for (stream, index) so that outcomes depend only on the
    // logical position, never on evaluation order.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
        Rng r(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
        std::uint64_t a = r.next_u64();
        Rng r2(a ^ (0xbf58476d1ce4e5b9ull * (index + 1)));
        return r2.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace ednig
