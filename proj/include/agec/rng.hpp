#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace agec {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Splittable deterministic generator. Streams are keyed by mixing the seed
// with caller-chosen integers, so a sample's randomness is independent of
// the order other samples are generated in. Output mappings are hand-rolled
// (instead of std:: distributions) to pin the byte-level behaviour.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    template <typename... Keys>
    static Rng keyed(std::uint64_t seed, Keys... keys) {
        std::uint64_t h = splitmix64(seed);
        ((h = splitmix64(h ^ static_cast<std::uint64_t>(keys))), ...);
        return Rng(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine here; n is tiny relative to 2^64.
        return next_u64() % n;
    }

    int sign() { return (next_u64() & 1) ? 1 : -1; }

    // Standard normal via Box-Muller; caches the spare value.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Fisher-Yates shuffle of [0, n) index vector.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace agec
