#pragma once

#include <cstdint>
#include <string_view>

namespace cslab {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Named sub-stream key derived from a parent seed.
std::uint64_t substream(std::uint64_t seed, std::string_view name) noexcept;
/// Indexed sub-stream key derived from a parent seed.
std::uint64_t substream(std::uint64_t seed, std::uint64_t index) noexcept;

/// Uniform in the open interval (0, 1), a pure function of its four counters.
double counter_uniform(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) noexcept;

/// Standard normal for (key, step, particle, component) via Box–Muller.
double counter_normal(std::uint64_t key, std::uint64_t step, std::uint64_t particle,
                      std::uint64_t component) noexcept;

/// Sequential generator over a counter-based stream; used for initial data.
class StreamRng {
public:
    explicit StreamRng(std::uint64_t key) : key_(key) {}
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace cslab
