#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace duprate {

/// SplitMix64: a counter-based generator. The state is a Weyl counter and
/// every output is a bijective hash of it, so substreams derived from
/// hashed (seed, id...) tuples are independent for practical purposes.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Derive an independent stream from a root seed and a path of ids, e.g.
/// (seed, replicate, type, incident).
template <typename... Ids>
SplitMix64 substream(std::uint64_t seed, Ids... ids) {
    std::uint64_t h = SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL);
    ((h = SplitMix64::mix(h ^ (static_cast<std::uint64_t>(ids) + 0x9e3779b97f4a7c15ULL))), ...);
    return SplitMix64{h};
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Exponential by inversion. rate = +inf gives 0, rate = 0 gives +inf.
inline double exponential(SplitMix64& g, double rate) {
    const double e = -std::log1p(-uniform01(g));
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return e / rate;
}

inline double standard_normal(SplitMix64& g) {
    return std::normal_distribution<double>{}(g);
}

inline std::uint64_t poisson(SplitMix64& g, double mean) {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(g);
}

}  // namespace duprate
