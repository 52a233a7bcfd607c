#pragma once

#include <cmath>
#include <cstdint>

namespace textctrl {

// Deterministic xoshiro256++ generator. All randomness in the project flows
// through explicitly seeded instances of this; results are bit-stable across
// platforms and standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        // splitmix64 expansion of the seed into the full state
        uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            si = z ^ (z >> 31);
        }
        has_cached_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Unbiased rejection sampling.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int range(int lo, int hi_inclusive) {
        return lo + int(below(uint64_t(hi_inclusive - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller (fixed algorithm, platform independent).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    float normal_f() { return float(normal()); }

    // Derive an independent child generator; stable regardless of call order
    // between children.
    Rng child(uint64_t stream) const {
        uint64_t mix = s_[0] ^ rotl(s_[2], 13) ^ (stream * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
        return Rng(mix);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4] = {};
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// Stable 64-bit FNV-1a hash, used to derive per-name parameter init streams.
inline uint64_t hash64(const char* s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (; *s; ++s) {
        h ^= uint64_t(uint8_t(*s));
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace textctrl
