#include "fbsde_ns/spectral_ops.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace fbsde {

namespace {

std::atomic<double> g_leray_corruption{0.0};

// Per-axis wavenumber tables: full (Nyquist kept) and first-derivative (Nyquist zeroed).
struct AxisTables {
    std::vector<double> k;
    std::vector<double> k1;
};

AxisTables axis_tables(const GridSpec& spec) {
    AxisTables t;
    t.k.resize(spec.n());
    t.k1.resize(spec.n());
    for (int m = 0; m < spec.n(); ++m) {
        t.k[m] = spec.wavenumber(m);
        t.k1[m] = spec.is_nyquist(m) ? 0.0 : t.k[m];
    }
    return t;
}

SpectralField single(const SpectralField& F, int c) {
    SpectralField out(F.spec(), 1);
    auto src = F.component(c);
    std::copy(src.begin(), src.end(), out.component(0).begin());
    return out;
}

} // namespace

double MultiplierOp::scalar_symbol(double k2) const {
    switch (kind) {
    case Kind::inverse_laplacian:
        if (k2 == 0.0) return zero_mode_rule == ZeroModeRule::zero ? 0.0 : 1.0;
        return -1.0 / k2;
    case Kind::heat:
        return std::exp(-nu_t * k2);
    default:
        throw std::logic_error("scalar_symbol: not a diagonal multiplier");
    }
}

void MultiplierOp::apply(SpectralField& F) const {
    const auto k2 = wavenumber_squared(F.spec());
    for (int c = 0; c < F.components(); ++c) {
        auto comp = F.component(c);
        for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= scalar_symbol(k2[i]);
    }
}

std::vector<double> wavenumber_squared(const GridSpec& spec) {
    const auto t = axis_tables(spec);
    std::vector<double> k2(spec.points());
    for (std::size_t idx = 0; idx < k2.size(); ++idx) {
        auto m = spec.unflatten(idx);
        double s = 0.0;
        for (int a = 0; a < spec.dim(); ++a) s += t.k[m[a]] * t.k[m[a]];
        k2[idx] = s;
    }
    return k2;
}

void dealias(SpectralField& F) {
    const auto& spec = F.spec();
    const int n = spec.n();
    std::vector<char> keep(spec.points());
    for (std::size_t idx = 0; idx < keep.size(); ++idx) {
        auto m = spec.unflatten(idx);
        bool k = true;
        for (int a = 0; a < spec.dim(); ++a)
            if (3 * std::abs(spec.signed_mode(m[a])) > n) k = false;
        keep[idx] = k;
    }
    for (int c = 0; c < F.components(); ++c) {
        auto comp = F.component(c);
        for (std::size_t i = 0; i < comp.size(); ++i)
            if (!keep[i]) comp[i] = 0.0;
    }
}

void leray_project_spectral(SpectralField& V) {
    const auto& spec = V.spec();
    const int d = spec.dim();
    if (V.components() != d) throw std::invalid_argument("leray: expected d components");
    const auto t = axis_tables(spec);
    const double eps = g_leray_corruption.load();
    for (std::size_t idx = 0; idx < spec.points(); ++idx) {
        auto m = spec.unflatten(idx);
        double k[kMaxDim] = {0, 0, 0};
        double k2 = 0.0;
        bool mean_mode = true;
        for (int a = 0; a < d; ++a) {
            k[a] = t.k1[m[a]];
            k2 += k[a] * k[a];
            if (m[a] != 0) mean_mode = false;
        }
        if (k2 == 0.0) continue; // identity on modes with no resolved first derivative
        Complex dot = 0.0;
        for (int a = 0; a < d; ++a) dot += k[a] * V.component(a)[idx];
        for (int a = 0; a < d; ++a) {
            Complex& c = V.component(a)[idx];
            c -= k[a] * dot / k2;
            if (eps != 0.0 && !mean_mode) c *= 1.0 + eps;
        }
    }
}

VectorField advection(const VectorField& v, const VectorField& g) {
    const auto& spec = v.spec();
    const int d = spec.dim();
    auto V = dft_forward(v);
    dealias(V);
    auto vf = dft_inverse_vector(V);
    auto G = dft_forward(g);
    dealias(G);
    VectorField out(spec);
    for (int j = 0; j < d; ++j) {
        auto dst = out.component(j);
        for (int i = 0; i < d; ++i) {
            auto Gj = single(G, j);
            apply_derivative(Gj, i, 1);
            auto dg = dft_inverse_scalar(Gj);
            auto vi = vf.component(i);
            for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += vi[p] * dg[p];
        }
    }
    auto O = dft_forward(out);
    dealias(O);
    return dft_inverse_vector(O);
}

ScalarField nonlinear_source(const VectorField& v) {
    const auto& spec = v.spec();
    const int d = spec.dim();
    auto V = dft_forward(v);
    dealias(V);
    // grad[i * d + j] = d_i v^j
    std::vector<ScalarField> grad;
    grad.reserve(d * d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            auto c = single(V, j);
            apply_derivative(c, i, 1);
            grad.push_back(dft_inverse_scalar(c));
        }
    }
    ScalarField G(spec);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const auto& a = grad[i * d + j];
            const auto& b = grad[j * d + i];
            for (std::size_t p = 0; p < spec.points(); ++p) G[p] += a[p] * b[p];
        }
    auto F = dft_forward(G);
    dealias(F);
    return dft_inverse_scalar(F);
}

ScalarField newton_potential(const ScalarField& f, ZeroModeRule rule) {
    auto F = dft_forward(f);
    MultiplierOp::inverse_laplacian(rule).apply(F);
    return dft_inverse_scalar(F);
}

VectorField pressure_gradient(const VectorField& v) {
    return gradient(newton_potential(nonlinear_source(v)));
}

VectorField leray_project(const VectorField& v) {
    auto V = dft_forward(v);
    leray_project_spectral(V);
    auto out = dft_inverse_vector(V);
    out.set_time_tag(v.time_tag());
    return out;
}

VectorField heat_semigroup(const VectorField& v, double nu, double t) {
    if (nu < 0.0) throw std::invalid_argument("heat_semigroup: negative viscosity");
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: negative duration");
    if (nu * t == 0.0) return v;
    auto V = dft_forward(v);
    MultiplierOp::heat(nu * t).apply(V);
    auto out = dft_inverse_vector(V);
    out.set_time_tag(v.time_tag());
    return out;
}

ScalarField heat_semigroup(const ScalarField& f, double nu, double t) {
    if (nu < 0.0) throw std::invalid_argument("heat_semigroup: negative viscosity");
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: negative duration");
    if (nu * t == 0.0) return f;
    auto F = dft_forward(f);
    MultiplierOp::heat(nu * t).apply(F);
    return dft_inverse_scalar(F);
}

ScalarField laplacian(const ScalarField& f) {
    auto F = dft_forward(f);
    const auto k2 = wavenumber_squared(f.spec());
    auto c = F.component(0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -k2[i];
    return dft_inverse_scalar(F);
}

namespace testing {
void set_leray_corruption(double eps) { g_leray_corruption.store(eps); }
double leray_corruption() { return g_leray_corruption.load(); }
} // namespace testing

} // namespace fbsde
