#pragma once

#include <cmath>
#include <cstdint>

namespace gcsvr {

/// Counter-based generator: a Weyl sequence keyed by the seed, pushed through
/// the splitmix64 finalizer. Bit-reproducible across platforms, and split()
/// derives an independent stream without consuming state from the parent.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : key_(mix(seed ^ 0xA0761D6478BD642FULL)) {}

    std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via the Marsaglia polar method (no cached spare).
    double next_gaussian() {
        for (;;) {
            const double u = 2.0 * next_double() - 1.0;
            const double v = 2.0 * next_double() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    SeededRng split(std::uint64_t stream) const {
        SeededRng child(0);
        child.key_ = mix(key_ ^ mix(stream + kGamma));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t stream_key() const { return key_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace gcsvr
