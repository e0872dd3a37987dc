#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "fbsde_ns/grid.hpp"

namespace fbsde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Smoothness index r = k + alpha with integrability p and summability q.
struct BesovIndex {
    double p = 2.0;
    double q = 2.0; ///< may be kInf
    int k = 0;
    double alpha = 0.5;

    /// Validates p in (1, inf), q in [1, inf], k >= 0, alpha in (0, 1).
    static BesovIndex make(double p, double q, int k, double alpha);
    /// Splits a non-integer r into k + alpha.
    static BesovIndex from_r(double p, double q, double r);

    double r() const { return k + alpha; }
};

/**
 * Discretization of the shift integral over |y| in (0, L/2].
 *
 * Shells are midpoint nodes in log|y| between y_min and L/2. The ball
 * |y| < y_min is covered by a first-order Taylor expansion of the shift
 * difference. Directions: the default count (2d + 2^d) selects the axis +
 * diagonal set (a degree-5 rule on the sphere in 3D, 8 equispaced angles in 2D);
 * any other count selects a product Gauss-Legendre x uniform-azimuth rule (3D)
 * or equispaced angles (2D).
 */
struct SeminormQuadrature {
    int radial_nodes = 16;
    int directions = 0;  ///< 0 selects the default 2d + 2^d
    double y_min = 0.0;  ///< 0 selects one grid spacing
    int direction_multiplier = 1; ///< scales the default count when directions == 0

    /// Resolved quadrature for a grid. Throws if radial_nodes < 4 or y_min < h.
    SeminormQuadrature resolved(const GridSpec& spec) const;
    /// `factor` times more shells and directions.
    SeminormQuadrature refined(int factor) const;
    std::string id() const;
};

struct Direction {
    Point unit{0, 0, 0};
    double weight = 0.0; ///< weights sum to the sphere area
};

std::vector<Direction> direction_set(int d, int count);

// Norms -------------------------------------------------------------------------------

/// (h^d sum |f|^p)^{1/p}; vector samples use the Euclidean magnitude.
double lp_norm(const ScalarField& f, double p);
double lp_norm(const VectorField& v, double p);
/// L^p norm of a tensor field given as its component list (Frobenius magnitude).
double lp_norm(const std::vector<ScalarField>& components, double p);

/// All components of the i-th derivative tensor of v, i in {0, 1, 2}.
std::vector<ScalarField> derivative_tensor(const VectorField& v, int order);

/// sum_{i=0}^k ||grad^i v||_{L^p}, k in {0, 1, 2}.
double sobolev_norm(const VectorField& v, int k, double p);

/// Shift-difference seminorm [v]_{B^{k+alpha}_{p,q}}.
double besov_seminorm(const VectorField& v, const BesovIndex& idx,
                      const SeminormQuadrature& quad = {});

/// ||v||_{W^{k,p}} + [v]_{B^{k+alpha}_{p,q}}.
double besov_norm(const VectorField& v, const BesovIndex& idx,
                  const SeminormQuadrature& quad = {});

/// Norm of smoothness r: Sobolev W^{r,p} when r is an integer, Besov otherwise.
double smoothness_norm(const VectorField& v, double r, double p, double q,
                       const SeminormQuadrature& quad = {});

/**
 * Hoelder exponent of the Sobolev embedding for p > d:
 * min(1 + alpha - d/p, 1), or (alpha + 1)/2 in the degenerate case
 * 1 + alpha - d/p == 1 where any value in (alpha, 1) is admissible.
 */
double embedding_exponent(double p, double alpha, int d);

struct InterpolationReport {
    double theta = 0.0;
    double norm_low = 0.0;
    double norm_mid = 0.0;
    double norm_high = 0.0;
    double ratio = 0.0; ///< norm_mid / (norm_low^theta norm_high^(1-theta)); 0 for v = 0
};

InterpolationReport interpolation_diagnostic(const VectorField& v, const BesovIndex& low,
                                             const BesovIndex& mid, const BesovIndex& high,
                                             const SeminormQuadrature& quad = {});

/// One row of a norm report: field_id,p,q,r,value,quadrature_id.
void write_norm_csv_row(std::ostream& os, const std::string& field_id, const BesovIndex& idx,
                        double value, const SeminormQuadrature& quad);

} // namespace fbsde
