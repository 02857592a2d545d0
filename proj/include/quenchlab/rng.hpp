#pragma once

#include <cstdint>
#include <cmath>

namespace qlab {

// splitmix64, used for seeding and for the documented replica-splitting rule
// seed_i = mix(seed, i).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64_next(s);
    s ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b + 0x632be59bd9b4e019ULL);
}

// xoshiro256++ with a fixed, implementation-independent stream of doubles.
// std::<distributions> are avoided on purpose: their output is
// implementation-defined and would break bit-reproducibility of reports.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = mix_seed(seed, stream);
        for (auto& word : state_) word = splitmix64_next(sm);
        have_normal_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0,1], safe as a log() argument
    double uniform_pos() { return 1.0 - uniform(); }

    // standard normal via Box-Muller (deterministic pair caching)
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        double u = uniform_pos();
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586476925286766559 * v;
        cached_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // random sign +-1
    int rademacher() { return (next_u64() >> 63) ? 1 : -1; }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is < 2^-53 for the sizes used here
        return next_u64() % n;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool have_normal_ = false;
};

// standard normal cdf
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

}  // namespace qlab
