#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fbsde_ns/grid.hpp"

namespace fbsde {

/**
 * Multilinear sampler over C fields packed node-interleaved. Each node stores
 * its own C samples followed by those of its successor along the last axis,
 * so a corner pair is one contiguous run of 2C doubles:
 *   data[node * 2C + c]       f_c(node)
 *   data[node * 2C + C + c]   f_c(node + e_last)
 * Coordinates need not be wrapped: indices are reduced modulo n.
 */
class PackedSampler {
public:
    PackedSampler() = default;
    PackedSampler(const GridSpec& spec, int channels);

    /// Copies the d components of v into channels [first, first + d).
    void load(const VectorField& v, int first);
    /// Copies a scalar field into channel c.
    void load(const ScalarField& f, int c);

    int channels() const { return channels_; }
    const GridSpec& spec() const { return spec_; }

    /// Evaluates all channels at x.
    void eval(const double* x, double* out) const {
        switch (channels_) {
        case 2: return eval_fixed<2>(x, out);
        case 3: return eval_fixed<3>(x, out);
        case 4: return eval_fixed<4>(x, out);
        case 6: return eval_fixed<6>(x, out);
        case 9: return eval_fixed<9>(x, out);
        default: return eval_dynamic(x, out);
        }
    }

    template <int C>
    void eval_fixed(const double* x, double* out) const {
        const Corners k = corners(x);
        if (spec_.dim() == 3) {
            double t[2 * C];
            const double* p00 = data_.data() + k.offset[0] * 2 * C;
            const double* p01 = data_.data() + k.offset[1] * 2 * C;
            const double* p10 = data_.data() + k.offset[2] * 2 * C;
            const double* p11 = data_.data() + k.offset[3] * 2 * C;
            for (int c = 0; c < 2 * C; ++c)
                t[c] = k.a[0] * p00[c] + k.a[1] * p01[c] + k.a[2] * p10[c] + k.a[3] * p11[c];
            for (int c = 0; c < C; ++c) out[c] = (1.0 - k.w_last) * t[c] + k.w_last * t[C + c];
        } else {
            const double* p0 = data_.data() + k.offset[0] * 2 * C;
            const double* p1 = data_.data() + k.offset[2] * 2 * C;
            for (int c = 0; c < C; ++c) {
                const double lo = k.a[0] * p0[c] + k.a[2] * p1[c];
                const double hi = k.a[0] * p0[C + c] + k.a[2] * p1[C + c];
                out[c] = (1.0 - k.w_last) * lo + k.w_last * hi;
            }
        }
    }

    /// Linear blend (1 - w) a + w b of two samplers on the same grid.
    static PackedSampler blend(const PackedSampler& a, const PackedSampler& b, double w);

private:
    // Node offsets of the corner pairs and the weights of the leading axes.
    // 3D: pairs (i0,i1), (i0,j1), (j0,i1), (j0,j1). 2D: pairs i0, -, j0, -.
    struct Corners {
        std::int64_t offset[4];
        double a[4];
        double w_last;
    };

    Corners corners(const double* x) const {
        const std::int64_t n = spec_.n();
        const std::int64_t mask = n - 1;
        Corners k;
        if (spec_.dim() == 3) {
            const double s0 = x[0] * inv_h_, s1 = x[1] * inv_h_, s2 = x[2] * inv_h_;
            const double f0 = std::floor(s0), f1 = std::floor(s1), f2 = std::floor(s2);
            const double w0 = s0 - f0, w1 = s1 - f1;
            k.w_last = s2 - f2;
            const std::int64_t i0 = static_cast<std::int64_t>(f0) & mask, i1 = static_cast<std::int64_t>(f1) & mask,
                               i2 = static_cast<std::int64_t>(f2) & mask;
            const std::int64_t j0 = (i0 + 1) & mask, j1 = (i1 + 1) & mask;
            k.offset[0] = (i0 * n + i1) * n + i2;
            k.offset[1] = (i0 * n + j1) * n + i2;
            k.offset[2] = (j0 * n + i1) * n + i2;
            k.offset[3] = (j0 * n + j1) * n + i2;
            k.a[0] = (1.0 - w0) * (1.0 - w1);
            k.a[1] = (1.0 - w0) * w1;
            k.a[2] = w0 * (1.0 - w1);
            k.a[3] = w0 * w1;
        } else {
            const double s0 = x[0] * inv_h_, s1 = x[1] * inv_h_;
            const double f0 = std::floor(s0), f1 = std::floor(s1);
            const double w0 = s0 - f0;
            k.w_last = s1 - f1;
            const std::int64_t i0 = static_cast<std::int64_t>(f0) & mask, i1 = static_cast<std::int64_t>(f1) & mask;
            const std::int64_t j0 = (i0 + 1) & mask;
            k.offset[0] = i0 * n + i1;
            k.offset[1] = k.offset[0];
            k.offset[2] = j0 * n + i1;
            k.offset[3] = k.offset[2];
            k.a[0] = 1.0 - w0;
            k.a[1] = 0.0;
            k.a[2] = w0;
            k.a[3] = 0.0;
        }
        return k;
    }

    void eval_dynamic(const double* x, double* out) const;
    void store(std::size_t node, int c, double value);

    GridSpec spec_ = GridSpec::make(2, 8, 1.0);
    int channels_ = 0;
    double inv_h_ = 1.0;
    std::vector<double> data_;
};

/// Wraps one coordinate into [0, L).
inline double wrap_coordinate(double x, double L) {
    if (x >= 0.0 && x < L) return x;
    double w = x - L * std::floor(x / L);
    if (w >= L) w -= L;
    if (w < 0.0) w = 0.0;
    return w;
}

} // namespace fbsde
