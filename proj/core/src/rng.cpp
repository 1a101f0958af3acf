#include "cslab/rng.hpp"

#include <cmath>
#include <numbers>

namespace cslab {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t substream(std::uint64_t seed, std::string_view name) noexcept {
    // FNV-1a over the name, then mixed with the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(seed) ^ h);
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double counter_uniform(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) noexcept {
    std::uint64_t h = mix64(key ^ mix64(a ^ mix64(b ^ mix64(c))));
    // 53 random bits, shifted by half an ulp so 0 is never returned.
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t key, std::uint64_t step, std::uint64_t particle,
                      std::uint64_t component) noexcept {
    const double u1 = counter_uniform(key, step, particle, 2 * component);
    const double u2 = counter_uniform(key, step, particle, 2 * component + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double StreamRng::uniform() noexcept {
    return counter_uniform(key_, counter_++, 0x5eed, 0);
}

double StreamRng::normal() noexcept {
    const double z = counter_normal(key_, counter_, 0x5eed, 1);
    ++counter_;
    return z;
}

}  // namespace cslab
