#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rmst {

/// Counter-based random stream built on splitmix64. Substreams are derived
/// by folding tags into the seed, so the stream for (seed, tag...) is fixed
/// regardless of which thread draws from it or in what order replicates run.
struct RngStream {
    std::uint64_t state = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    explicit RngStream(std::uint64_t seed = 0) : state(mix(seed)) {}

    /// Derived substream: state' = mix(state ^ mix(tag)).
    RngStream derive(std::uint64_t tag) const {
        RngStream s;
        s.state = mix(state ^ mix(tag));
        return s;
    }

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1); never returns an endpoint.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double weibull(double shape, double scale) {
        return scale * std::pow(-std::log(uniform()), 1.0 / shape);
    }

    double normal(double mean, double sd);
};

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace rmst
