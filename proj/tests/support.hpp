#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "fbsde_ns/grid.hpp"

namespace fbsde::test {

inline constexpr double kTwoPi = 6.283185307179586;

inline ScalarField scalar_from(const GridSpec& spec, const std::function<double(const Point&)>& f) {
    ScalarField out(spec);
    for (std::size_t i = 0; i < spec.points(); ++i) out[i] = f(spec.node(i));
    return out;
}

inline VectorField vector_from(const GridSpec& spec, const std::function<Point(const Point&)>& f) {
    VectorField out(spec);
    for (std::size_t i = 0; i < spec.points(); ++i) {
        const Point v = f(spec.node(i));
        for (int c = 0; c < spec.dim(); ++c) out.component(c)[i] = v[c];
    }
    return out;
}

inline VectorField noise_field(const GridSpec& spec, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    VectorField out(spec);
    for (double& x : out.data()) x = z(gen);
    return out;
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_of(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

} // namespace fbsde::test
