#pragma once

#include <cassert>
#include <cstdint>
#include <random>
#include <vector>

namespace eqperf {

// Deterministic RNG. mt19937_64 output is fully specified by the standard;
// the distribution adaptors are not, so the sampling helpers below are
// implemented by hand to keep replay stable across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Rejection sampling, no modulo bias.
    uint64_t below(uint64_t n) {
        assert(n > 0);
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [lo, hi] inclusive.
    int64_t range_i(int64_t lo, int64_t hi) {
        assert(lo <= hi);
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    // Weighted index draw; weights need not be normalized.
    size_t weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        assert(total > 0.0);
        double x = unit() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        assert(!v.empty());
        return v[below(v.size())];
    }

    template <typename T, size_t N>
    const T& pick(const T (&arr)[N]) {
        return arr[below(N)];
    }

    // Fisher-Yates. std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng fork(uint64_t salt) { return Rng(engine_() ^ salt); }

private:
    std::mt19937_64 engine_;
};

}  // namespace eqperf
