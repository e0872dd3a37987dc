#pragma once

#include "fbsde_ns/grid.hpp"

namespace fbsde {

/// How a multiplier treats the k = 0 (mean) mode.
enum class ZeroModeRule { zero, identity };

/**
 * MultiplierOp: a Fourier multiplier on the periodic box.
 *
 *  inverse_laplacian               -1/|k|^2
 *  leray                           I - k k^T / |k|^2   (vector fields only)
 *  heat                            exp(-nu t |k|^2)
 *  gradient_of_inverse_laplacian   -i k / |k|^2        (scalar -> vector)
 *
 * First-derivative symbols use the Nyquist-zeroed wavenumber so that the
 * operators stay consistent with `derivative` and preserve Hermitian symmetry.
 */
struct MultiplierOp {
    enum class Kind { inverse_laplacian, leray, heat, gradient_of_inverse_laplacian };

    Kind kind = Kind::inverse_laplacian;
    ZeroModeRule zero_mode_rule = ZeroModeRule::zero;
    double nu_t = 0.0; ///< only for heat

    static MultiplierOp inverse_laplacian(ZeroModeRule rule = ZeroModeRule::zero) {
        return {Kind::inverse_laplacian, rule, 0.0};
    }
    static MultiplierOp leray() { return {Kind::leray, ZeroModeRule::identity, 0.0}; }
    static MultiplierOp heat(double nu_t) { return {Kind::heat, ZeroModeRule::identity, nu_t}; }
    static MultiplierOp gradient_of_inverse_laplacian() {
        return {Kind::gradient_of_inverse_laplacian, ZeroModeRule::zero, 0.0};
    }

    /// Scalar symbol for the diagonal kinds (not leray / gradient).
    double scalar_symbol(double k2) const;

    /// Applies a diagonal multiplier to every component in place.
    void apply(SpectralField& F) const;
};

// Spectral utilities shared by the solvers ---------------------------------------------

/// Zeroes every mode with 3 |s(m_a)| > n on some axis (2/3 rule).
void dealias(SpectralField& F);

/// |k|^2 per linear spectral index (Nyquist included).
std::vector<double> wavenumber_squared(const GridSpec& spec);

/// Dealiased (v . grad) g for two vector fields on the same grid.
VectorField advection(const VectorField& v, const VectorField& g);

/// Projection acting in place on spectral vector coefficients.
void leray_project_spectral(SpectralField& V);

// Operators ----------------------------------------------------------------------------

/// G_v = sum_{i,j} d_i v^j d_j v^i, dealiased.
ScalarField nonlinear_source(const VectorField& v);

/// Inverse Laplacian N f; under the `zero` rule the mean of f is discarded.
ScalarField newton_potential(const ScalarField& f, ZeroModeRule rule = ZeroModeRule::zero);

/// F_v = grad N G_v.
VectorField pressure_gradient(const VectorField& v);

/// Leray-Hodge projection P v = v - grad N (div v); mean mode passed through.
VectorField leray_project(const VectorField& v);

/// exp(t nu Laplacian) v. Rejects negative nu or t.
VectorField heat_semigroup(const VectorField& v, double nu, double t);
ScalarField heat_semigroup(const ScalarField& f, double nu, double t);

/// Laplacian of a scalar field (spectral).
ScalarField laplacian(const ScalarField& f);

namespace testing {
/// Fault-injection hook: scales every non-mean mode of the projector output by
/// (1 + eps). Zero restores the exact projector.
void set_leray_corruption(double eps);
double leray_corruption();
} // namespace testing

} // namespace fbsde
