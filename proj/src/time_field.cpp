#include "fbsde_ns/time_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbsde_ns/besov.hpp"

namespace fbsde {

TimeIndexedField::TimeIndexedField(const TimeGrid& grid, std::vector<VectorField> snapshots)
    : grid_(grid), snapshots_(std::move(snapshots)) {
    if (static_cast<int>(snapshots_.size()) != grid_.steps + 1)
        throw std::invalid_argument("time-indexed field: need steps + 1 snapshots");
    for (const auto& s : snapshots_)
        if (!(s.spec() == snapshots_.front().spec()))
            throw std::invalid_argument("time-indexed field: snapshots must share a grid");
    for (int k = 0; k <= grid_.steps; ++k) snapshots_[k].set_time_tag(grid_.time(k));
}

TimeIndexedField TimeIndexedField::constant(const TimeGrid& grid, const VectorField& v) {
    return TimeIndexedField(grid, std::vector<VectorField>(grid.steps + 1, v));
}

VectorField TimeIndexedField::at(double t) const {
    const double s = std::clamp((t - grid_.t0) / grid_.dt(), 0.0, static_cast<double>(grid_.steps));
    const int k = std::min(static_cast<int>(std::floor(s)), grid_.steps - 1);
    const double w = s - k;
    if (w <= 0.0) return snapshots_[k];
    if (w >= 1.0) return snapshots_[k + 1];
    VectorField out = (1.0 - w) * snapshots_[k];
    out += w * snapshots_[k + 1];
    out.set_time_tag(t);
    return out;
}

double TimeIndexedField::max_divergence_l2() const {
    double worst = 0.0;
    for (const auto& s : snapshots_) worst = std::max(worst, lp_norm(divergence(s), 2.0));
    return worst;
}

double sup_l2_difference(const TimeIndexedField& a, const TimeIndexedField& b) {
    if (a.size() != b.size()) throw std::invalid_argument("time grids differ");
    double worst = 0.0;
    for (int k = 0; k < a.size(); ++k) worst = std::max(worst, lp_norm(a[k] - b[k], 2.0));
    return worst;
}

double sup_relative_l2(const TimeIndexedField& a, const TimeIndexedField& b) {
    double scale = 0.0;
    for (int k = 0; k < b.size(); ++k) scale = std::max(scale, lp_norm(b[k], 2.0));
    const double diff = sup_l2_difference(a, b);
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace fbsde
