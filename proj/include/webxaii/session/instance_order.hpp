#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace webxaii {

/// 64-bit FNV-1a over the raw bytes of `data`.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// SplitMix64 stream (Steele, Lea & Flood). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform-ish index in [0, bound); modulo reduction, bias is negligible for small bounds.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept { return (*this)() % bound; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~std::uint64_t{0}; }

private:
    std::uint64_t state_;
};

/// Presentation order of a task's instances for one participant.
///
/// Element p of the result is the declared index of the instance shown at
/// position p. Seeded by FNV-1a("protocol|task|login") into SplitMix64, then a
/// Fisher-Yates pass for j = n-1 down to 1 swapping j with (next() mod (j+1)).
/// With `randomize` false the identity is returned and nothing is drawn.
std::vector<std::size_t> derive_instance_order(std::string_view protocol_id, std::string_view task_id,
                                               std::string_view user_login, std::size_t n, bool randomize = true);

}  // namespace webxaii
