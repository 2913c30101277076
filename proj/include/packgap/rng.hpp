#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace packgap {

// Seeded RNG with arithmetic kept explicit so streams are bit-stable across
// standard libraries (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling, no modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {  // inclusive range
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Uniform real in [0, 1).
    double next_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double next_real(double lo, double hi) { return lo + (hi - lo) * next_real(); }

    bool next_bernoulli(double p) { return next_real() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

    // Independent child stream derived from (seed, stream_id) only; does not
    // consume or perturb this stream. splitmix64-style mixing.
    Rng fork(std::uint64_t stream_id) const {
        std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream_id + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace packgap
