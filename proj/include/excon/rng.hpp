#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace excon {

// Counter-based generator: value i of a stream is a pure function of
// (seed, stream ids, i), so draws are identical no matter which order
// streams are consumed in or how work is split across threads.

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        base_ = mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
    }

    std::uint64_t next_u64() { return mix64(base_ + counter_++ * 0x9E3779B97F4A7C15ull); }

    // uniform in [0,1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo,hi)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // standard normal via Box-Muller; consumes exactly two draws
    double next_gaussian() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // uniform integer in [0,n)
    std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
};

// Stream purpose tags, so unrelated consumers of one seed never collide.
namespace rng_stream {
constexpr std::uint64_t kSynth = 1;
constexpr std::uint64_t kWeightInit = 2;
constexpr std::uint64_t kShuffle = 3;
constexpr std::uint64_t kDropout = 4;
constexpr std::uint64_t kRocket = 5;
}  // namespace rng_stream

}  // namespace excon
