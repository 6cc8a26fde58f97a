#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "svhom/rng.hpp"

using namespace svhom;

TEST_CASE("philox4x32-10 reproduces the published test vectors") {
    {
        const PhiloxBlock b = philox4x32_10(0, 0, 0, 0, 0, 0);
        CHECK(b.v[0] == 0x6627e8d5u);
        CHECK(b.v[1] == 0xe169c58du);
        CHECK(b.v[2] == 0xbc57ac4cu);
        CHECK(b.v[3] == 0x9b00dbd8u);
    }
    {
        const PhiloxBlock b = philox4x32_10(0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu,
                                            0xffffffffu, 0xffffffffu);
        CHECK(b.v[0] == 0x408f276du);
        CHECK(b.v[1] == 0x41c83b0eu);
        CHECK(b.v[2] == 0xa20bc7c6u);
        CHECK(b.v[3] == 0x6d5451fdu);
    }
    {
        const PhiloxBlock b = philox4x32_10(0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u,
                                            0xa4093822u, 0x299f31d0u);
        CHECK(b.v[0] == 0xd16cfe09u);
        CHECK(b.v[1] == 0x94fdccebu);
        CHECK(b.v[2] == 0x5001e420u);
        CHECK(b.v[3] == 0x24126ea1u);
    }
}

TEST_CASE("normal draws have the right first moments") {
    PathRng rng(42, 0);
    const std::int64_t N = 200000;
    double s = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::int64_t i = 0; i < N; ++i) {
        const double z = rng.normal(static_cast<std::uint64_t>(i / 4),
                                    static_cast<std::uint32_t>(i % 4));
        s += z;
        s2 += z * z;
        s3 += z * z * z;
    }
    const double mean = s / N;
    const double var = s2 / N - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(N)));
    CHECK(std::abs(var - 1.0) < 0.02);
    CHECK(std::abs(s3 / N) < 0.05);
}

TEST_CASE("draws are stateless and keyed by (seed, path, step, slot)") {
    PathRng a(7, 11), b(7, 11), c(8, 11), d(7, 12);
    CHECK(a.normal(3, 1) == b.normal(3, 1));
    CHECK(a.normal(3, 1) != c.normal(3, 1));
    CHECK(a.normal(3, 1) != d.normal(3, 1));
    CHECK(a.normal(3, 1) != a.normal(4, 1));
    CHECK(a.normal(3, 0) != a.normal(3, 2));

    // normals() fills the same values as slot-wise access
    double buf[5];
    a.normals(9, 0, buf, 5);
    for (int k = 0; k < 5; ++k) CHECK(buf[k] == a.normal(9, static_cast<std::uint32_t>(k)));
}
