#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace aspp {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable, splittable deterministic generator.
///
/// A path's stream is a pure function of (base_seed, stream_index), so
/// ensembles are reproducible regardless of how paths are scheduled.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    static Rng for_stream(std::uint64_t base_seed, std::uint64_t stream_index) {
        return Rng(splitmix64(base_seed) ^ splitmix64(~stream_index));
    }

    double uniform(double low, double high) {
        return std::uniform_real_distribution<double>(low, high)(engine_);
    }

    double normal() { return normal_(engine_); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    engine_type& engine() noexcept { return engine_; }

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.engine_ == b.engine_ && a.normal_ == b.normal_;
    }

private:
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace aspp
