#pragma once

#include <cstdint>
#include <cmath>

namespace sublin {

// splitmix64, used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** generator. Self-contained so that sampled values are
// bit-identical across platforms and standard libraries; reproducibility of
// every run is part of the contract, not an afterthought.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // uniform in [0,n)
    std::int64_t index(std::int64_t n) {
        return static_cast<std::int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via polar Box-Muller
    double gaussian() {
        for (;;) {
            double u = 2.0 * uniform() - 1.0;
            double v = 2.0 * uniform() - 1.0;
            double r2 = u * u + v * v;
            if (r2 > 0.0 && r2 < 1.0) return u * std::sqrt(-2.0 * std::log(r2) / r2);
        }
    }

    // Independent child stream; used by trainers to give each round its own
    // stream derived from the master seed.
    Rng substream(std::uint64_t tag) {
        std::uint64_t mix = u64_peek() ^ (0xa076'1d64'78bd'642fULL * (tag + 1));
        return Rng(mix);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t u64_peek() const { return s_[0] ^ s_[3]; }
    std::uint64_t s_[4]{};
};

// sin(pi*x) for |x| <= 0.5, odd polynomial in x. Max error ~7e-10, which is
// far below every statistical tolerance in the test suite; used in the hot
// phase-estimation sampling loop where libm sin would dominate runtime.
inline double sinpi_half(double x) {
    const double x2 = x * x;
    // Taylor series of sin(pi x)/x in powers of x^2, truncated after x^12.
    double p = 4.663028057676125e-04;
    p = p * x2 - 7.370430945714350e-03;
    p = p * x2 + 8.214588661112823e-02;
    p = p * x2 - 5.992645293207921e-01;
    p = p * x2 + 2.550164039877345e+00;
    p = p * x2 - 5.167712780049970e+00;
    p = p * x2 + 3.141592653589793e+00;
    return x * p;
}

} // namespace sublin
