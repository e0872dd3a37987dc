#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde_ns/besov.hpp"
#include "fbsde_ns/grid.hpp"
#include "fbsde_ns/time_field.hpp"

namespace fbsde {

enum class MapScheme { mc_drifted, mild };
enum class Integrator { euler_maruyama, heun };

std::string to_string(MapScheme s);
MapScheme parse_map_scheme(const std::string& s);
std::string to_string(Integrator s);
Integrator parse_integrator(const std::string& s);

struct SolverConfig {
    double nu = 0.1;
    double T = 0.25;
    int time_steps = 2;   ///< output intervals on [0, T]
    int substeps = 2;     ///< path steps per output interval
    int paths = 10000;    ///< M
    int batches = 16;     ///< batch means for derived standard errors
    double smoothness = 2.5;   ///< r of the full norm; the monitoring norm uses max(r - 1, 1)
    double p = 4.0;
    double q = 4.0;
    double tol = 1e-3;    ///< residual relative to the monitoring norm of u0
    int max_iters = 12;
    int max_halvings = 4;
    MapScheme scheme = MapScheme::mc_drifted;
    Integrator integrator = Integrator::heun;
    int mild_substeps = 32;
    int interp_refinement = 2; ///< MC fields are sampled on a grid this many times finer
    std::uint64_t seed = 1;
    bool common_random_numbers = true;
    SeminormQuadrature quadrature{};

    double monitoring_r() const { return smoothness - 1.0 > 1.0 ? smoothness - 1.0 : 1.0; }
    TimeGrid time_grid() const { return TimeGrid::make(0.0, T, time_steps); }
    void validate() const;
};

/// Monte-Carlo estimate of g on the output grid with its sampling error.
struct McEstimate {
    TimeIndexedField g;
    std::vector<VectorField> std_error;       ///< pointwise standard error per output time
    std::vector<std::vector<VectorField>> batch_means; ///< [time][batch]
    std::vector<double> std_error_l2;         ///< L^2 norm of the pointwise standard error per time

    /// L^p norm of the batch-means standard error of a linear functional per output time.
    std::vector<double> functional_std_error(const std::function<ScalarField(const VectorField&)>& op,
                                             double p) const;
};

/**
 * g(T - t, x) = E u0(X_T^t(x)) + int_t^T E F_v(T - s, X_s^t(x)) ds on every output
 * time, with M drifted paths per grid point. The Brownian path for index m is
 * shared by every grid point and every output time.
 */
McEstimate evaluate_g_mc(const TimeIndexedField& v, const VectorField& u0, const SolverConfig& cfg,
                         std::uint64_t seed);

/// Deterministic dual: dg/dt + v.grad g = nu Lap g + F_v, g(0) = u0 (integrating-factor RK4).
TimeIndexedField pde_oracle_g(const TimeIndexedField& v, const VectorField& u0, double nu, int substeps);

/// Mild form g(t) = e^{t nu Lap} u0 - int_0^t e^{(t-s) nu Lap}(v.grad g - F_v)(s) ds.
TimeIndexedField evaluate_g_mild(const TimeIndexedField& v, const VectorField& u0, double nu, int substeps);

/// Thrown when inner sweeps of the mild evaluator fail to settle.
struct MildDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MapResult {
    TimeIndexedField value;              ///< P g per output time
    TimeIndexedField pre_projection;     ///< g
    std::vector<double> divergence_lp;   ///< ||div g(t)||_{L^p}
    std::vector<double> divergence_std_error; ///< MC standard error of the above (0 for mild)
    std::vector<double> std_error_l2;    ///< MC standard error of g (0 for mild)
    std::vector<VectorField> std_error;  ///< pointwise MC standard error of g (zero fields for mild)
};

MapResult apply_I_nu(const TimeIndexedField& v, const SolverConfig& cfg, std::uint64_t seed);
MapResult apply_I_prime_nu(const TimeIndexedField& v, const SolverConfig& cfg);

/// sup_t ||div g(t)||_{L^p} with the per-time values.
std::vector<double> divergence_diagnostic(const TimeIndexedField& g, double p);

/// Dealiased pseudo-spectral Navier-Stokes with integrating-factor RK4.
TimeIndexedField reference_ns_solve(const VectorField& u0, double nu, const TimeGrid& grid, int substeps);

/// Smallest substep count per output interval meeting the advective CFL number 0.8.
int cfl_substeps(double max_speed, double h, double interval);

enum class PicardStatus { converged, max_iters, diverging };
std::string to_string(PicardStatus s);

struct PicardState {
    std::vector<TimeIndexedField> iterates;   ///< u_1 = u0, u_2, ...
    std::vector<double> residuals;            ///< monitoring-norm residual per iteration
    std::vector<double> residuals_full;       ///< full-smoothness norm residual
    std::vector<double> contraction_ratios;   ///< residual_{n+1} / residual_n
    std::vector<double> divergence_history;   ///< sup_t ||div g_n||_{L^p} before projection
    std::vector<double> divergence_std_error; ///< its MC standard error
    std::vector<double> std_error_history;    ///< sup_t L^2 standard error of g_n
    std::vector<VectorField> std_error_fields; ///< pointwise standard error of the last map evaluation
    std::vector<double> wall_seconds;
    std::vector<double> horizons_tried;
    std::vector<std::string> warnings;
    PicardStatus status = PicardStatus::max_iters;
    double horizon = 0.0;
    double reference_norm = 0.0;             ///< monitoring norm of u0

    const TimeIndexedField& solution() const { return iterates.back(); }
};

struct PicardOptions {
    bool compute_full_residual = true;
    std::function<void(const PicardState&)> on_iteration;
};

PicardState picard_solve(const VectorField& u0, const SolverConfig& cfg, const PicardOptions& opt = {});

/// Rows iter,residual_monitor,residual_full,contraction_ratio,divergence_sup (deterministic columns only).
void write_picard_csv(std::ostream& os, const PicardState& st);

/// Norm used to monitor residuals: smoothness max(r - 1, 1) at (p, q).
double monitoring_norm(const VectorField& v, const SolverConfig& cfg);
double full_norm(const VectorField& v, const SolverConfig& cfg);

} // namespace fbsde
