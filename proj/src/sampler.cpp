#include "fbsde_ns/sampler.hpp"

#include <stdexcept>

namespace fbsde {

PackedSampler::PackedSampler(const GridSpec& spec, int channels)
    : spec_(spec), channels_(channels), inv_h_(1.0 / spec.spacing()),
      data_(spec.points() * 2 * channels, 0.0) {
    if (channels < 1) throw std::invalid_argument("sampler: need at least one channel");
}

void PackedSampler::store(std::size_t node, int c, double value) {
    const int n = spec_.n();
    const int C = channels_;
    data_[node * 2 * C + c] = value;
    // the predecessor along the last axis keeps this sample as its upper pair member
    const std::size_t row = node - node % n;
    const std::size_t prev = row + (node % n + n - 1) % n;
    data_[prev * 2 * C + C + c] = value;
}

void PackedSampler::load(const VectorField& v, int first) {
    if (!(v.spec() == spec_)) throw std::invalid_argument("sampler: grid mismatch");
    if (first < 0 || first + v.components() > channels_) throw std::invalid_argument("sampler: channel overflow");
    const std::size_t np = spec_.points();
    for (int c = 0; c < v.components(); ++c) {
        auto src = v.component(c);
        for (std::size_t i = 0; i < np; ++i) store(i, first + c, src[i]);
    }
}

void PackedSampler::load(const ScalarField& f, int c) {
    if (!(f.spec() == spec_)) throw std::invalid_argument("sampler: grid mismatch");
    if (c < 0 || c >= channels_) throw std::invalid_argument("sampler: channel overflow");
    const std::size_t np = spec_.points();
    for (std::size_t i = 0; i < np; ++i) store(i, c, f[i]);
}

void PackedSampler::eval_dynamic(const double* x, double* out) const {
    const Corners k = corners(x);
    const int C = channels_;
    for (int c = 0; c < C; ++c) {
        double lo = 0.0, hi = 0.0;
        for (int q = 0; q < 4; ++q) {
            const double* p = data_.data() + k.offset[q] * 2 * C;
            lo += k.a[q] * p[c];
            hi += k.a[q] * p[C + c];
        }
        out[c] = (1.0 - k.w_last) * lo + k.w_last * hi;
    }
}

PackedSampler PackedSampler::blend(const PackedSampler& a, const PackedSampler& b, double w) {
    if (!(a.spec_ == b.spec_) || a.channels_ != b.channels_)
        throw std::invalid_argument("sampler blend: layouts differ");
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    PackedSampler out(a.spec_, a.channels_);
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = (1.0 - w) * a.data_[i] + w * b.data_[i];
    return out;
}

} // namespace fbsde
