#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbsde_ns/grid.hpp"
#include "fbsde_ns/sampler.hpp"
#include "fbsde_ns/time_field.hpp"

namespace fbsde {

/**
 * Characteristics of the backward flow on the torus, path time s in [t, T]:
 *   drifted        dX = sqrt(2 nu) dB - v(T - s, X) ds     (Euler-Maruyama)
 *   brownian       X = x + sqrt(2 nu) (B_s - B_t)          (exact)
 *   deterministic  dX = -v(T - s, X) ds, nu = 0            (RK4)
 * T is the horizon of the velocity's time grid.
 */
enum class FlowScheme { drifted, brownian, deterministic };

std::string to_string(FlowScheme s);
FlowScheme parse_flow_scheme(const std::string& s);

/// Paths per start point. Brownian increments are shared by every start point.
struct PathEnsemble {
    FlowScheme scheme = FlowScheme::drifted;
    double nu = 0.0;
    double horizon = 0.0; ///< T: drift at path time s is v(T - s)
    TimeGrid grid;        ///< path times t = s_0 < ... < s_K
    int dim = 3;
    int paths = 0;
    std::uint64_t seed = 0;
    std::vector<Point> starts;
    std::vector<double> positions;  ///< ((point * M + path) * (K + 1) + k) * d + a
    std::vector<double> increments; ///< (path * K + k) * d + a, B_{s_{k+1}} - B_{s_k}

    int steps() const { return grid.steps; }
    std::size_t points() const { return starts.size(); }
    Point position(std::size_t point, int path, int k) const;
    Point increment(int path, int k) const;
};

/// Largest dt accepted for drifted / deterministic schemes: h / (2 max|v|).
double stability_bound(const TimeIndexedField& v);

PathEnsemble simulate(const TimeIndexedField& v, FlowScheme scheme, double nu,
                      const std::vector<Point>& starts, const TimeGrid& path_grid, int paths,
                      std::uint64_t seed);

/// d x d matrices per (point, path, step), row-major: entry (a, b) = dX^a / dx^b.
struct FlowGradient {
    int dim = 3;
    int paths = 0;
    int steps = 0;
    std::size_t points = 0;
    std::vector<double> matrices;

    const double* at(std::size_t point, int path, int k) const {
        return matrices.data() + ((point * paths + path) * (steps + 1) + k) * dim * dim;
    }
};

/// Integrates d(grad X) = -grad v(T - s, X_s) grad X ds along each frozen path (RK4).
FlowGradient flow_gradient(const TimeIndexedField& v, const PathEnsemble& ensemble);

std::vector<double> jacobian_determinant(const FlowGradient& g);

struct GradientEstimate {
    Point mean{0, 0, 0};
    Point std_error{0, 0, 0};
};

/// Bismut-Elworthy-Li estimate of grad_x E f(x + sqrt(2 nu)(B_s - B_t)).
GradientEstimate bel_gradient(const std::function<double(const Point&)>& f, int d, const Point& x,
                              double t, double s, double nu, int paths, std::uint64_t seed);
GradientEstimate bel_gradient(const ScalarField& f, const Point& x, double t, double s, double nu,
                              int paths, std::uint64_t seed,
                              InterpolationMode mode = InterpolationMode::multilinear);

/// Samples v at time t (linear between snapshots) into a d-channel sampler.
PackedSampler velocity_sampler(const TimeIndexedField& v, double t);

/// Shortest periodic displacement b - a per axis.
Point minimal_image(const Point& a, const Point& b, double L, int d);

// PTH1: "PTH1", u32 scheme, u32 M, u32 steps, u64 seed, u32 d, u32 points, f64 positions.
void write_pth1(std::ostream& os, const PathEnsemble& e);
void write_pth1(const std::string& path, const PathEnsemble& e);

} // namespace fbsde
