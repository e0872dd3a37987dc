#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbsde {

using Complex = std::complex<double>;

/// Maximum supported spatial dimension.
inline constexpr int kMaxDim = 3;

/// A point (or vector) in R^d, d <= 3. Unused trailing entries are zero.
using Point = std::array<double, kMaxDim>;

/**
 * GridSpec: geometry of the periodic box [0, L)^d sampled by n points per axis.
 *
 * Linear node index is row-major with axis 0 slowest:
 *   idx = (i0 * n + i1) * n + i2          (d = 3)
 * Node coordinates are x_a = i_a * h with h = L / n.
 *
 * Spectral index m_a in [0, n) maps to the signed mode
 *   s(m) = m        for m <  n/2
 *   s(m) = m - n    for m >= n/2          (m = n/2 is the Nyquist mode)
 * and to the angular wavenumber k = 2*pi*s(m)/L.
 */
class GridSpec {
public:
    /// Validates and builds a grid. Throws std::invalid_argument.
    static GridSpec make(int d, int n, double box_length);

    int dim() const { return d_; }
    int n() const { return n_; }
    double box_length() const { return box_length_; }
    double spacing() const { return box_length_ / n_; }
    std::size_t points() const { return points_; }
    double cell_volume() const;
    double volume() const;

    /// Signed FFT-order mode for spectral index m.
    int signed_mode(int m) const { return m < n_ / 2 ? m : m - n_; }
    /// Angular wavenumber for spectral index m.
    double wavenumber(int m) const;
    bool is_nyquist(int m) const { return m == n_ / 2; }

    /// Multi-index of linear index idx (trailing entries zero for d = 2).
    std::array<int, kMaxDim> unflatten(std::size_t idx) const;
    std::size_t flatten(const std::array<int, kMaxDim>& i) const;
    Point node(std::size_t idx) const;

    /// Wraps a point into [0, L)^d.
    Point wrap(Point p) const;

    bool operator==(const GridSpec& o) const {
        return d_ == o.d_ && n_ == o.n_ && box_length_ == o.box_length_;
    }

private:
    GridSpec(int d, int n, double L);

    int d_ = 3;
    int n_ = 8;
    double box_length_ = 0.0;
    std::size_t points_ = 0;
};

/// Real scalar samples on a grid.
class ScalarField {
public:
    explicit ScalarField(const GridSpec& spec);
    ScalarField(const GridSpec& spec, std::vector<double> data);

    const GridSpec& spec() const { return spec_; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double mean() const;

private:
    GridSpec spec_;
    std::vector<double> data_;
};

/// d-component real vector field, component-major storage.
class VectorField {
public:
    explicit VectorField(const GridSpec& spec, std::optional<double> time_tag = std::nullopt);
    VectorField(const GridSpec& spec, std::vector<double> data,
                std::optional<double> time_tag = std::nullopt);

    const GridSpec& spec() const { return spec_; }
    int components() const { return spec_.dim(); }
    std::optional<double> time_tag() const { return time_tag_; }
    void set_time_tag(std::optional<double> t) { time_tag_ = t; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    std::span<const double> component(int c) const;
    std::span<double> component(int c);

    /// Component c as a standalone scalar field.
    ScalarField component_field(int c) const;
    void set_component(int c, const ScalarField& f);

    /// Vector sample at node idx.
    Point at(std::size_t idx) const;

    VectorField& operator+=(const VectorField& o);
    VectorField& operator-=(const VectorField& o);
    VectorField& operator*=(double s);

private:
    GridSpec spec_;
    std::vector<double> data_;
    std::optional<double> time_tag_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Fourier coefficients c_k = (1/N) sum_x f(x) exp(-i k.x), per component.
class SpectralField {
public:
    SpectralField(const GridSpec& spec, int components);

    const GridSpec& spec() const { return spec_; }
    int components() const { return components_; }
    std::span<const Complex> coeffs() const { return coeffs_; }
    std::span<Complex> coeffs() { return coeffs_; }
    std::span<const Complex> component(int c) const;
    std::span<Complex> component(int c);

    /// Largest |c_k - conj(c_{-k})| relative to max |c_k|.
    double hermitian_defect() const;

private:
    GridSpec spec_;
    int components_;
    std::vector<Complex> coeffs_;
};

/// Uniform time grid t0 < t0 + dt < ... < T.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;

    static TimeGrid make(double t0, double T, int steps);
    double dt() const { return (T - t0) / steps; }
    double time(int k) const { return k == steps ? T : t0 + k * dt(); }
};

// Transforms -----------------------------------------------------------------

/// Throws std::domain_error naming the first non-finite sample.
void require_finite(std::span<const double> data, const char* what);

SpectralField dft_forward(const VectorField& f);
SpectralField dft_forward(const ScalarField& f);
VectorField dft_inverse_vector(const SpectralField& F);
ScalarField dft_inverse_scalar(const SpectralField& F);

/// Trigonometric resampling onto n_new points per axis (zero padding or
/// truncation). Nyquist modes of either grid are dropped.
VectorField spectral_resample(const VectorField& f, int n_new);

// Differentiation ------------------------------------------------------------

/// Spectral derivative with multiplier (i k_axis)^order, order in {1, 2}.
/// The Nyquist mode is zeroed for odd orders.
ScalarField derivative(const ScalarField& f, int axis, int order);
VectorField derivative(const VectorField& f, int axis, int order);

/// Multiplies each coefficient in place by (i k_axis)^order.
void apply_derivative(SpectralField& F, int axis, int order);

ScalarField divergence(const VectorField& v);
/// Curl of a 3-component field (d = 3 only).
VectorField curl(const VectorField& v);
/// Gradient of a scalar field.
VectorField gradient(const ScalarField& f);

/// Velocity-gradient tensor: entry (i, j) = d_i v^j, stored i * d + j.
std::vector<ScalarField> gradient_tensor(const VectorField& v);

// Interpolation ----------------------------------------------------------------

enum class InterpolationMode { multilinear, trigonometric };

/// Evaluates v at an arbitrary point (wrapped onto the torus).
Point interpolate(const VectorField& v, const Point& x,
                  InterpolationMode mode = InterpolationMode::multilinear);
double interpolate(const ScalarField& f, const Point& x,
                   InterpolationMode mode = InterpolationMode::multilinear);

// Discrete norms on grid samples ---------------------------------------------------

/// sqrt(mean of |v|^2) over nodes.
double rms(const VectorField& v);
double rms(const ScalarField& f);
double max_abs(std::span<const double> data);

} // namespace fbsde
