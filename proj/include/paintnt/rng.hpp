#pragma once

#include <cmath>
#include <cstdint>

namespace paintnt {

// Counter-based splittable generator (SplitMix64 core). Every stochastic
// operation takes one of these explicitly, so runs are byte-reproducible
// and independent streams can be derived for folds/threads.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    // Derived stream: deterministic function of (key, index), independent
    // of this stream's counter position.
    Rng split(uint64_t index) const {
        Rng r(0);
        r.key_ = mix(key_ ^ mix(index + 0x2545f4914f6cdd1dULL));
        r.counter_ = 0;
        return r;
    }

    uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * M_PI * u2);
        has_cached_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Truncated normal in [-2*sigma, 2*sigma], rejection sampled.
    double truncated_normal(double sigma) {
        for (;;) {
            double v = normal() * sigma;
            if (std::abs(v) <= 2.0 * sigma) return v;
        }
    }

private:
    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t key_;
    uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace paintnt
