#pragma once

#include <cstdint>
#include <cmath>

#include "irselect/common.hpp"

namespace irselect {

// Counter-based generator: SplitMix64 applied to (seed, counter).  Every draw
// is a pure function of the pair, so audits reproduce across runs and across
// implementations given the same seed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t word(std::uint64_t counter) const {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

// Sequential stream over a CounterRng.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t start = 0)
        : gen_(seed), counter_(start) {}

    std::uint64_t next_word() { return gen_.word(counter_++); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_word() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) { return next_word() % n; }

    // Box-Muller; second value cached so the stream stays counter-deterministic.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * kPi * u2);
        have_cached_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    cplx normal_complex() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

private:
    CounterRng gen_;
    std::uint64_t counter_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace irselect
