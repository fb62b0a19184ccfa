#pragma once

#include <cstdint>
#include <string_view>

namespace schemalink {

/// FNV-1a over bytes. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t seed) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    return fnv1a64(std::string_view(buf, 8), seed);
}

/// splitmix64: tiny, well-mixed, reproducible generator. All sampling in the
/// toolkit flows through this so that outputs are identical across platforms.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 bits of entropy.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64 in
        // every use (column counts), so the bias is < 2^-50.
        return next_u64() % n;
    }

  private:
    std::uint64_t state_;
};

/// Derives an independent substream from a base seed and a string key,
/// e.g. (seed, question_id, "table.column").
inline SplitMix64 substream(std::uint64_t seed, std::string_view key) {
    return SplitMix64(fnv1a64(key, fnv1a64_u64(seed, 0x9e3779b97f4a7c15ULL)));
}

inline SplitMix64 substream(std::uint64_t seed, std::string_view key_a, std::string_view key_b) {
    std::uint64_t h = fnv1a64_u64(seed, 0x9e3779b97f4a7c15ULL);
    h = fnv1a64(key_a, h);
    h = fnv1a64("\x1f", h);  // separator so ("ab","c") != ("a","bc")
    h = fnv1a64(key_b, h);
    return SplitMix64(h);
}

}  // namespace schemalink
