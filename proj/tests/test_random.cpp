#include <doctest.h>

#include <cmath>
#include <vector>

#include "iselab/random.hpp"

using namespace iselab;

TEST_CASE("philox known-answer vectors") {
    // Reference vectors distributed with Random123.
    auto r = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    CHECK(r == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    r = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(r == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    r = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(r == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms are reproducible and well spread") {
    const std::vector<std::int64_t> idx{3, -7};
    CHECK(uniform_at(42, idx) == uniform_at(42, idx));
    CHECK(uniform_at(42, idx) != uniform_at(43, idx));
    CounterStream s(7, 1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform(std::uint64_t(i));
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}
