#pragma once

#include <cstdint>
#include <cmath>

namespace sginfer {

// SplitMix64: the stream-derivation hash. Every parallel unit of work gets
// its own generator via derive(master_seed, index), so replicate k of a
// simulation draws the same numbers no matter how work is scheduled.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++, seeded through SplitMix64. Bit-reproducible everywhere we
// build; no std:: distributions are used anywhere (their outputs are not
// portable across standard libraries).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
        has_spare_ = false;
    }

    static std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
        SplitMix64 sm(master_seed ^ (0xd1342543de82ef95ULL * (stream_index + 1)));
        return sm.next();
    }

    static Rng derive(std::uint64_t master_seed, std::uint64_t stream_index) {
        return Rng(derive_seed(master_seed, stream_index));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); unbiased via rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal, Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // u1 = 0 would take log(0); shift into (0, 1].
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_;
};

}  // namespace sginfer
