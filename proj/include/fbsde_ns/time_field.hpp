#pragma once

#include <vector>

#include "fbsde_ns/grid.hpp"

namespace fbsde {

/// Velocity snapshots on a uniform time grid; linear in time between snapshots.
class TimeIndexedField {
public:
    TimeIndexedField(const TimeGrid& grid, std::vector<VectorField> snapshots);

    /// Every snapshot equal to v (tagged with its time).
    static TimeIndexedField constant(const TimeGrid& grid, const VectorField& v);

    const TimeGrid& time_grid() const { return grid_; }
    const GridSpec& spec() const { return snapshots_.front().spec(); }
    int size() const { return static_cast<int>(snapshots_.size()); }
    const VectorField& operator[](int k) const { return snapshots_[k]; }
    VectorField& operator[](int k) { return snapshots_[k]; }
    const std::vector<VectorField>& snapshots() const { return snapshots_; }

    /// Snapshot at time t (clamped to the grid), linear between grid times.
    VectorField at(double t) const;

    /// Largest discrete L^2 norm of the divergence over snapshots.
    double max_divergence_l2() const;
    bool is_divergence_free(double tol) const { return max_divergence_l2() <= tol; }

private:
    TimeGrid grid_;
    std::vector<VectorField> snapshots_;
};

/// sup over snapshots of ||a(t) - b(t)||_{L^2} / sup ||b(t)||_{L^2}.
double sup_relative_l2(const TimeIndexedField& a, const TimeIndexedField& b);
/// sup over snapshots of ||a(t) - b(t)||_{L^2}.
double sup_l2_difference(const TimeIndexedField& a, const TimeIndexedField& b);

} // namespace fbsde
