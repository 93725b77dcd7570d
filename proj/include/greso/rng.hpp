// Seeded counter-free PRNG for deterministic simulation runs.
//
// Every random decision in a run is drawn from a substream keyed by what the
// decision is about (seed, prompt id, step, epoch, purpose tag). Substreams
// make results independent of evaluation order, so a parallel rollout fan-out
// produces bit-identical numbers to a serial loop. No std::*_distribution is
// used anywhere: their output is implementation-defined, which would break
// byte-identical metrics across toolchains.

#pragma once

#include <cstdint>
#include <initializer_list>

namespace greso {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Fold an arbitrary key list into one 64-bit stream seed.
inline constexpr std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x5851F42D4C957F2DULL;
    for (std::uint64_t k : keys) {
        h = splitmix64(h ^ k);
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derive the substream for a keyed decision, e.g.
    /// Rng::substream(seed, prompt_id, step, epoch, tag).
    template <typename... Keys>
    static Rng substream(std::uint64_t seed, Keys... keys) {
        return Rng(mix_keys({seed, static_cast<std::uint64_t>(keys)...}));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_unit() < p; }

    /// Uniform integer in [0, n). Multiply-shift bound; n must be > 0.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t x = next_u64();
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(n)) >> 64);
    }

    double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

private:
    std::uint64_t state_;
};

/// In-place Fisher-Yates with an explicit bound function; std::shuffle is
/// implementation-defined and would not reproduce across standard libraries.
template <typename Container>
void deterministic_shuffle(Container& items, Rng& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
        auto tmp = items[i];
        items[i] = items[j];
        items[j] = tmp;
    }
}

// Purpose tags for substream derivation. Distinct tags keep decision families
// (rollout draws, skip coins, shuffles, dataset build) from sharing bits.
namespace rng_tag {
inline constexpr std::uint64_t dataset = 0xD47A5E7ULL;
inline constexpr std::uint64_t rollout = 0x0110D1ULL;
inline constexpr std::uint64_t skip = 0x5C19ULL;
inline constexpr std::uint64_t shuffle = 0x5FF1EULL;
inline constexpr std::uint64_t answer = 0xA45ULL;
}  // namespace rng_tag

}  // namespace greso
