#pragma once

#include <cmath>
#include <cstdint>

// Counter-based RNG: Philox4x32-10 keyed by the run seed, counted by
// (path index, step, block). Stateless draws make Monte Carlo results
// independent of thread count and evaluation order.

namespace svhom {

struct PhiloxBlock {
    std::uint32_t v[4];
};

inline PhiloxBlock philox4x32_10(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                                 std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint64_t M0 = 0xD2511F53ull;
    constexpr std::uint64_t M1 = 0xCD9E8D57ull;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = M0 * c0;
        const std::uint64_t p1 = M1 * c2;
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += W0;
        k1 += W1;
    }
    return {{c0, c1, c2, c3}};
}

// Uniform in (0,1), never exactly 0 or 1: 53-bit mantissa from two 32-bit words.
inline double uniform_from_u64(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Per-path stream: standard normals indexed by (step, slot). Slots pair up
// into Box-Muller draws; one Philox block yields one pair.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path_index)
        : k0_(static_cast<std::uint32_t>(seed)),
          k1_(static_cast<std::uint32_t>(seed >> 32)),
          p0_(static_cast<std::uint32_t>(path_index)),
          p1_(static_cast<std::uint32_t>(path_index >> 32)) {}

    // Both normals of one Box-Muller pair; block indexes pairs within a step.
    void normal_pair(std::uint64_t step, std::uint32_t block, double& z0, double& z1) const {
        const std::uint32_t s_lo = static_cast<std::uint32_t>(step);
        const std::uint32_t s_hi = static_cast<std::uint32_t>(step >> 32);
        const PhiloxBlock b = philox4x32_10(p0_, p1_, s_lo, block ^ (s_hi << 8), k0_, k1_);
        const double u1 = uniform_from_u64(b.v[0], b.v[1]);
        const double u2 = uniform_from_u64(b.v[2], b.v[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

    double normal(std::uint64_t step, std::uint32_t slot) const {
        double z0, z1;
        normal_pair(step, slot >> 1, z0, z1);
        return (slot & 1u) ? z1 : z0;
    }

    // Fill out[0..count) with normals for one step.
    void normals(std::uint64_t step, std::uint32_t first_block, double* out, int count) const {
        int i = 0;
        std::uint32_t blk = first_block;
        while (i + 1 < count) {
            normal_pair(step, blk++, out[i], out[i + 1]);
            i += 2;
        }
        if (i < count) {
            double z0, z1;
            normal_pair(step, blk, z0, z1);
            out[i] = z0;
        }
    }

private:
    std::uint32_t k0_, k1_, p0_, p1_;
};

}  // namespace svhom
