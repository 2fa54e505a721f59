#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace iselab {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Stateless: the output is a pure function of (key, counter), so any draw can be
 * regenerated from its coordinates without replaying a stream. This is what makes
 * site values independent of enumeration order and worker count.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key);
};

/// 64-bit finalizer from SplitMix64; used to fold multi-indices into counter words.
std::uint64_t mix64(std::uint64_t x);

/// Hash of an integer multi-index, stable across platforms.
std::uint64_t hash_index(std::span<const std::int64_t> index);

/// A keyed stream of uniforms. `seed` keys the generator; `stream` and `slot`
/// select a disjoint family of counters; `draw` enumerates within it.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::array<std::uint32_t, 4> block(std::uint64_t draw) const;

    // Uniform in [0,1) with 53 random bits.
    double uniform(std::uint64_t draw) const;
    std::uint64_t bits64(std::uint64_t draw) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Child seed for (parent, a, b), e.g. (master, L index, trial index).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0);

/// Uniform in [0,1) attached to (seed, multi-index, draw); the site sampler uses draw 0.
double uniform_at(std::uint64_t seed, std::span<const std::int64_t> index, std::uint64_t draw = 0);

} // namespace iselab
