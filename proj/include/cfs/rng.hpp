// Deterministic random streams. std:: distributions are implementation
// defined, so uniform/normal are written out explicitly; a (seed, stream)
// pair always yields the same sequence on any platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cfs {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(splitmix64(seed ^ splitmix64(stream + 0x51ed2701ULL))), engine_(base_) {}

    // Independent child stream; deterministic in (this rng's seed, tag) and
    // unaffected by draws made from the parent.
    Rng fork(std::uint64_t tag) const { return Rng(base_, tag + 1); }

    std::uint64_t next_u64() { return engine_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_int(std::uint64_t n) {  // [0, n)
        // Rejection keeps it exactly uniform.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    double normal(double mean = 0.0, double sigma = 1.0) {
        // Box-Muller; second deviate cached.
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + sigma * r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t base_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cfs
