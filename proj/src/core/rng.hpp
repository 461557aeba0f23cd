#pragma once

#include <cstdint>
#include <string_view>

namespace cnhp {

/// SplitMix64 step; also used to derive independent substreams from a seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a 64-bit hash, used to derive label-specific bootstrap seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t label_seed(std::string_view label, std::uint64_t base_seed) {
    return base_seed ^ fnv1a64(label);
}

/// Combines a stream seed with a draw index so resamples are order-independent.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64(s);
}

/// Minimal deterministic generator. All randomness in the artifact flows
/// through this type; std:: distributions are avoided because their output is
/// implementation-defined, and reproducibility here is a bit-level contract.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so adjacent integer seeds decorrelate immediately.
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe as a logit argument.
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential with the given rate via inversion.
    double exponential(double rate);

    /// Standard normal (Box-Muller; second value of each pair is cached).
    double normal();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

  private:
    std::uint64_t state_;
    double cached_normal_{0.0};
    bool has_cached_normal_{false};
};

}  // namespace cnhp
