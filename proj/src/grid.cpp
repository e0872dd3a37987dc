#include "fbsde_ns/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace fbsde {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int d, int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(d, n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
        auto* in = fftw_alloc_complex(total);
        auto* out = fftw_alloc_complex(total);
        int dims[kMaxDim] = {n, n, n};
        fftw_plan plan = fftw_plan_dft(d, dims, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void execute(const GridSpec& spec, int sign, const Complex* in, Complex* out) {
    fftw_plan plan = PlanCache::instance().get(spec.dim(), spec.n(), sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void forward_component(const GridSpec& spec, std::span<const double> f, std::span<Complex> out) {
    std::vector<Complex> buf(f.begin(), f.end());
    execute(spec, FFTW_FORWARD, buf.data(), out.data());
    const double scale = 1.0 / static_cast<double>(spec.points());
    for (auto& c : out) c *= scale;
}

void inverse_component(const GridSpec& spec, std::span<const Complex> F, std::span<double> out) {
    std::vector<Complex> buf(F.size());
    execute(spec, FFTW_BACKWARD, F.data(), buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
}

} // namespace

// GridSpec ----------------------------------------------------------------------

GridSpec::GridSpec(int d, int n, double L) : d_(d), n_(n), box_length_(L) {
    points_ = 1;
    for (int a = 0; a < d; ++a) points_ *= static_cast<std::size_t>(n);
}

GridSpec GridSpec::make(int d, int n, double box_length) {
    if (d != 2 && d != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0)
        throw std::invalid_argument("points per axis must be a power of two >= 8");
    if (!(box_length > 0.0) || !std::isfinite(box_length))
        throw std::invalid_argument("box length must be positive");
    if (d == 3 && n > 1024) throw std::invalid_argument("grid too large");
    return GridSpec(d, n, box_length);
}

double GridSpec::cell_volume() const { return std::pow(spacing(), d_); }
double GridSpec::volume() const { return std::pow(box_length_, d_); }

double GridSpec::wavenumber(int m) const {
    return 2.0 * std::numbers::pi * signed_mode(m) / box_length_;
}

std::array<int, kMaxDim> GridSpec::unflatten(std::size_t idx) const {
    std::array<int, kMaxDim> i{0, 0, 0};
    for (int a = d_ - 1; a >= 0; --a) {
        i[a] = static_cast<int>(idx % n_);
        idx /= n_;
    }
    return i;
}

std::size_t GridSpec::flatten(const std::array<int, kMaxDim>& i) const {
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) idx = idx * n_ + static_cast<std::size_t>(i[a]);
    return idx;
}

Point GridSpec::node(std::size_t idx) const {
    auto i = unflatten(idx);
    Point p{0, 0, 0};
    for (int a = 0; a < d_; ++a) p[a] = i[a] * spacing();
    return p;
}

Point GridSpec::wrap(Point p) const {
    for (int a = 0; a < d_; ++a) {
        double w = std::fmod(p[a], box_length_);
        if (w < 0) w += box_length_;
        if (w >= box_length_) w = 0.0;
        p[a] = w;
    }
    return p;
}

// Fields --------------------------------------------------------------------------

ScalarField::ScalarField(const GridSpec& spec) : spec_(spec), data_(spec.points(), 0.0) {}

ScalarField::ScalarField(const GridSpec& spec, std::vector<double> data)
    : spec_(spec), data_(std::move(data)) {
    if (data_.size() != spec_.points()) throw std::invalid_argument("scalar field size mismatch");
}

double ScalarField::mean() const {
    double s = 0.0;
    for (double x : data_) s += x;
    return s / static_cast<double>(data_.size());
}

VectorField::VectorField(const GridSpec& spec, std::optional<double> time_tag)
    : spec_(spec), data_(spec.points() * spec.dim(), 0.0), time_tag_(time_tag) {}

VectorField::VectorField(const GridSpec& spec, std::vector<double> data,
                         std::optional<double> time_tag)
    : spec_(spec), data_(std::move(data)), time_tag_(time_tag) {
    if (data_.size() != spec_.points() * spec_.dim())
        throw std::invalid_argument("vector field size mismatch");
}

std::span<const double> VectorField::component(int c) const {
    return std::span<const double>(data_).subspan(c * spec_.points(), spec_.points());
}

std::span<double> VectorField::component(int c) {
    return std::span<double>(data_).subspan(c * spec_.points(), spec_.points());
}

ScalarField VectorField::component_field(int c) const {
    auto s = component(c);
    return ScalarField(spec_, std::vector<double>(s.begin(), s.end()));
}

void VectorField::set_component(int c, const ScalarField& f) {
    auto dst = component(c);
    std::copy(f.data().begin(), f.data().end(), dst.begin());
}

Point VectorField::at(std::size_t idx) const {
    Point p{0, 0, 0};
    for (int c = 0; c < components(); ++c) p[c] = data_[c * spec_.points() + idx];
    return p;
}

VectorField& VectorField::operator+=(const VectorField& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

VectorField& VectorField::operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

SpectralField::SpectralField(const GridSpec& spec, int components)
    : spec_(spec), components_(components), coeffs_(spec.points() * components) {}

std::span<const Complex> SpectralField::component(int c) const {
    return std::span<const Complex>(coeffs_).subspan(c * spec_.points(), spec_.points());
}

std::span<Complex> SpectralField::component(int c) {
    return std::span<Complex>(coeffs_).subspan(c * spec_.points(), spec_.points());
}

double SpectralField::hermitian_defect() const {
    double peak = 0.0;
    for (auto& c : coeffs_) peak = std::max(peak, std::abs(c));
    if (peak == 0.0) return 0.0;
    const int n = spec_.n();
    double worst = 0.0;
    for (int c = 0; c < components_; ++c) {
        auto comp = component(c);
        for (std::size_t idx = 0; idx < spec_.points(); ++idx) {
            auto m = spec_.unflatten(idx);
            std::array<int, kMaxDim> neg{0, 0, 0};
            for (int a = 0; a < spec_.dim(); ++a) neg[a] = (n - m[a]) % n;
            worst = std::max(worst, std::abs(comp[idx] - std::conj(comp[spec_.flatten(neg)])));
        }
    }
    return worst / peak;
}

TimeGrid TimeGrid::make(double t0, double T, int steps) {
    if (!(T > t0)) throw std::invalid_argument("time grid requires T > t0");
    if (steps < 1) throw std::invalid_argument("time grid requires at least one step");
    return TimeGrid{t0, T, steps};
}

// Transforms --------------------------------------------------------------------------

void require_finite(std::span<const double> data, const char* what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            std::ostringstream os;
            os << what << ": non-finite sample at index " << i;
            throw std::domain_error(os.str());
        }
    }
}

SpectralField dft_forward(const VectorField& f) {
    require_finite(f.data(), "dft_forward");
    SpectralField F(f.spec(), f.components());
    for (int c = 0; c < f.components(); ++c) forward_component(f.spec(), f.component(c), F.component(c));
    return F;
}

SpectralField dft_forward(const ScalarField& f) {
    require_finite(f.data(), "dft_forward");
    SpectralField F(f.spec(), 1);
    forward_component(f.spec(), f.data(), F.component(0));
    return F;
}

VectorField dft_inverse_vector(const SpectralField& F) {
    if (F.components() != F.spec().dim())
        throw std::invalid_argument("dft_inverse_vector: component count must equal d");
    VectorField f(F.spec());
    for (int c = 0; c < F.components(); ++c) inverse_component(F.spec(), F.component(c), f.component(c));
    return f;
}

ScalarField dft_inverse_scalar(const SpectralField& F) {
    if (F.components() != 1) throw std::invalid_argument("dft_inverse_scalar: expected one component");
    ScalarField f(F.spec());
    inverse_component(F.spec(), F.component(0), f.data());
    return f;
}

VectorField spectral_resample(const VectorField& f, int n_new) {
    const GridSpec& src = f.spec();
    const GridSpec dst = GridSpec::make(src.dim(), n_new, src.box_length());
    if (n_new == src.n()) return f;
    const SpectralField F = dft_forward(f);
    SpectralField G(dst, f.components());
    const int d = src.dim();
    const int keep = std::min(src.n(), n_new) / 2; // |s| < keep survives
    for (std::size_t idx = 0; idx < src.points(); ++idx) {
        const auto m = src.unflatten(idx);
        std::array<int, kMaxDim> t{0, 0, 0};
        bool inside = true;
        for (int a = 0; a < d; ++a) {
            const int s = src.signed_mode(m[a]);
            if (std::abs(s) >= keep) inside = false;
            t[a] = s < 0 ? s + n_new : s;
        }
        if (!inside) continue;
        const std::size_t to = dst.flatten(t);
        for (int c = 0; c < f.components(); ++c) G.component(c)[to] = F.component(c)[idx];
    }
    VectorField out(dst, f.time_tag());
    for (int c = 0; c < f.components(); ++c) inverse_component(dst, G.component(c), out.component(c));
    return out;
}

// Differentiation -------------------------------------------------------------------------

void apply_derivative(SpectralField& F, int axis, int order) {
    const auto& spec = F.spec();
    if (axis < 0 || axis >= spec.dim()) throw std::invalid_argument("derivative: axis out of range");
    if (order != 1 && order != 2) throw std::invalid_argument("derivative: order must be 1 or 2");
    std::vector<Complex> mult(spec.n());
    for (int m = 0; m < spec.n(); ++m) {
        const double k = spec.wavenumber(m);
        if (order == 1)
            mult[m] = spec.is_nyquist(m) ? Complex(0.0) : Complex(0.0, k);
        else
            mult[m] = Complex(-k * k, 0.0);
    }
    // stride of `axis` in the linear index
    std::size_t stride = 1;
    for (int a = spec.dim() - 1; a > axis; --a) stride *= spec.n();
    const std::size_t n = spec.n();
    for (int c = 0; c < F.components(); ++c) {
        auto comp = F.component(c);
        for (std::size_t idx = 0; idx < comp.size(); ++idx) comp[idx] *= mult[(idx / stride) % n];
    }
}

ScalarField derivative(const ScalarField& f, int axis, int order) {
    auto F = dft_forward(f);
    apply_derivative(F, axis, order);
    return dft_inverse_scalar(F);
}

VectorField derivative(const VectorField& f, int axis, int order) {
    auto F = dft_forward(f);
    apply_derivative(F, axis, order);
    return dft_inverse_vector(F);
}

ScalarField divergence(const VectorField& v) {
    const auto& spec = v.spec();
    auto V = dft_forward(v);
    SpectralField D(spec, 1);
    auto out = D.component(0);
    for (int a = 0; a < spec.dim(); ++a) {
        SpectralField comp(spec, 1);
        auto src = V.component(a);
        std::copy(src.begin(), src.end(), comp.component(0).begin());
        apply_derivative(comp, a, 1);
        auto cc = comp.component(0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cc[i];
    }
    return dft_inverse_scalar(D);
}

VectorField curl(const VectorField& v) {
    if (v.spec().dim() != 3) throw std::invalid_argument("curl requires d = 3");
    auto d = [&](int comp, int axis) { return derivative(v.component_field(comp), axis, 1); };
    VectorField w(v.spec());
    auto set = [&](int c, const ScalarField& a, const ScalarField& b) {
        auto dst = w.component(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] - b[i];
    };
    set(0, d(2, 1), d(1, 2));
    set(1, d(0, 2), d(2, 0));
    set(2, d(1, 0), d(0, 1));
    return w;
}

VectorField gradient(const ScalarField& f) {
    VectorField g(f.spec());
    auto F = dft_forward(f);
    for (int a = 0; a < f.spec().dim(); ++a) {
        SpectralField Fa = F;
        apply_derivative(Fa, a, 1);
        g.set_component(a, dft_inverse_scalar(Fa));
    }
    return g;
}

std::vector<ScalarField> gradient_tensor(const VectorField& v) {
    const int d = v.spec().dim();
    std::vector<ScalarField> out;
    out.reserve(d * d);
    auto V = dft_forward(v);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            SpectralField c(v.spec(), 1);
            auto src = V.component(j);
            std::copy(src.begin(), src.end(), c.component(0).begin());
            apply_derivative(c, i, 1);
            out.push_back(dft_inverse_scalar(c));
        }
    }
    return out;
}

// Interpolation -------------------------------------------------------------------------------

namespace {

double multilinear(const GridSpec& spec, std::span<const double> f, const Point& x) {
    const int d = spec.dim();
    const int n = spec.n();
    const double inv_h = 1.0 / spec.spacing();
    std::array<int, kMaxDim> lo{0, 0, 0};
    std::array<int, kMaxDim> hi{0, 0, 0};
    std::array<double, kMaxDim> w{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        double s = x[a] * inv_h;
        // node coordinates i * h can land a rounding error below i
        const double r = std::nearbyint(s);
        if (std::abs(s - r) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) s = r;
        double fl = std::floor(s);
        w[a] = s - fl;
        int i = static_cast<int>(fl) % n;
        if (i < 0) i += n;
        lo[a] = i;
        hi[a] = (i + 1) % n;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        std::array<int, kMaxDim> idx{0, 0, 0};
        double weight = 1.0;
        for (int a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1;
            idx[a] = up ? hi[a] : lo[a];
            weight *= up ? w[a] : 1.0 - w[a];
        }
        if (weight != 0.0) acc += weight * f[spec.flatten(idx)];
    }
    return acc;
}

double trigonometric(const GridSpec& spec, std::span<const Complex> F, const Point& x) {
    const int d = spec.dim();
    const int n = spec.n();
    // per-axis phase factors; the Nyquist mode contributes its cosine part only
    std::array<std::vector<Complex>, kMaxDim> phase;
    for (int a = 0; a < d; ++a) {
        phase[a].resize(n);
        for (int m = 0; m < n; ++m) {
            const double k = spec.wavenumber(m);
            phase[a][m] = spec.is_nyquist(m) ? Complex(std::cos(k * x[a]), 0.0)
                                             : std::exp(Complex(0.0, k * x[a]));
        }
    }
    Complex acc = 0.0;
    for (std::size_t idx = 0; idx < F.size(); ++idx) {
        if (F[idx] == Complex(0.0)) continue;
        auto m = spec.unflatten(idx);
        Complex p = F[idx];
        for (int a = 0; a < d; ++a) p *= phase[a][m[a]];
        acc += p;
    }
    return acc.real();
}

void check_point(const Point& x, int d) {
    for (int a = 0; a < d; ++a)
        if (std::isnan(x[a])) throw std::invalid_argument("interpolate: NaN coordinate");
}

} // namespace

Point interpolate(const VectorField& v, const Point& x, InterpolationMode mode) {
    const auto& spec = v.spec();
    check_point(x, spec.dim());
    const Point y = spec.wrap(x);
    Point out{0, 0, 0};
    if (mode == InterpolationMode::multilinear) {
        for (int c = 0; c < v.components(); ++c) out[c] = multilinear(spec, v.component(c), y);
    } else {
        auto F = dft_forward(v);
        for (int c = 0; c < v.components(); ++c) out[c] = trigonometric(spec, F.component(c), y);
    }
    return out;
}

double interpolate(const ScalarField& f, const Point& x, InterpolationMode mode) {
    const auto& spec = f.spec();
    check_point(x, spec.dim());
    const Point y = spec.wrap(x);
    if (mode == InterpolationMode::multilinear) return multilinear(spec, f.data(), y);
    auto F = dft_forward(f);
    return trigonometric(spec, F.component(0), y);
}

double rms(const VectorField& v) {
    double s = 0.0;
    for (double x : v.data()) s += x * x;
    return std::sqrt(s / static_cast<double>(v.spec().points()));
}

double rms(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.data()) s += x * x;
    return std::sqrt(s / static_cast<double>(f.spec().points()));
}

double max_abs(std::span<const double> data) {
    double m = 0.0;
    for (double x : data) m = std::max(m, std::abs(x));
    return m;
}

} // namespace fbsde
