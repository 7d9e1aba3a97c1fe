#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinn {

// Exit-code mapping used by the CLI: 1 config, 2 numerical, 3 invariant.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Deterministic 64-bit mixer (splitmix64). Used to derive independent
// substream seeds from a run seed and a purpose tag.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const char* s) {
    std::uint64_t h = 1469598103934665603ull;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 1099511628211ull;
    return h;
}

// Small deterministic RNG (xorshift64*). Hand-rolled so streams are
// bit-reproducible across platforms; std::uniform_real_distribution is
// implementation-defined and would break that.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x106689d45497fdb5ull) {
        // warm up xorshift-style state
        for (int i = 0; i < 4; ++i) next();
    }

    static Rng child(std::uint64_t seed, const char* tag) {
        return Rng(mix64(seed ^ fnv1a(tag)));
    }

    std::uint64_t next() {
        // xorshift64* generator
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

// Pairwise (tree) reduction; reproducible independent of how the values
// were produced. Used by pde_loss and the metric sums.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// |a - b| relative to the larger magnitude, with an absolute floor so
// comparisons against near-zero values stay meaningful.
inline double rel_diff(double a, double b, double floor = 1e-12) {
    double scale = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / scale;
}

}  // namespace pinn
