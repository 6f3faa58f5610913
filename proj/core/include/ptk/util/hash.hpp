#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ptk {

struct Hash128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    friend bool operator==(const Hash128&, const Hash128&) = default;
    friend auto operator<=>(const Hash128&, const Hash128&) = default;

    std::string hex() const;
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept {
        return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ULL));
    }
};

// MurmurHash3 x64 128-bit variant.
Hash128 murmur3_128(std::span<const std::byte> data, std::uint64_t seed = 0);
Hash128 murmur3_128(std::string_view text, std::uint64_t seed = 0);

inline std::uint64_t hash64(std::string_view text, std::uint64_t seed = 0) {
    return murmur3_128(text, seed).lo;
}

std::uint64_t fnv1a64(std::string_view text);

/// splitmix64 finalizer; a good bijective mixer for 64-bit keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace ptk
