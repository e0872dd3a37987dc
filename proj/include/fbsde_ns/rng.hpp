#pragma once

#include <array>
#include <cstdint>

namespace fbsde {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Every draw is a pure function of (key, counter), so a stream can be
 * addressed directly by (seed, path, step) without any sequential state.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Counter operator()(Counter ctr) const {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    Key key_;
};

/// Maps two 32-bit words to a double strictly inside (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    // 53 random bits, offset by half an ulp to avoid both endpoints
    return (static_cast<double>(bits & ((1ull << 53) - 1)) + 0.5) * 0x1.0p-53;
}

/// Standard normal quantile.
double inverse_normal_cdf(double u);

/**
 * Standard normal draws addressed by (path, step, slot).
 *
 * One Philox call yields two normals; slot selects the pair, so a d-vector
 * of increments needs ceil(d/2) calls.
 */
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

    /// Fills out[0..count) with independent N(0,1) draws for (path, step).
    void draws(std::uint64_t path, std::uint64_t step, double* out, int count) const {
        for (int slot = 0; 2 * slot < count; ++slot) {
            const auto r = gen_({static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                                 static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(slot)});
            out[2 * slot] = inverse_normal_cdf(to_open_unit(r[0], r[1]));
            if (2 * slot + 1 < count) out[2 * slot + 1] = inverse_normal_cdf(to_open_unit(r[2], r[3]));
        }
    }

private:
    Philox4x32 gen_;
};

/// Mixes a master seed with a stream label (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (label + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace fbsde
