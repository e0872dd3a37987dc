#include "fbsde_ns/besov.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>


namespace fbsde {

namespace {

double sphere_area(int d) { return d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

int default_directions(int d) { return 2 * d + (1 << d); }

SpectralField component_spectrum(const std::vector<ScalarField>& comps) {
    const auto& spec = comps.front().spec();
    SpectralField F(spec, static_cast<int>(comps.size()));
    for (std::size_t c = 0; c < comps.size(); ++c) {
        auto one = dft_forward(comps[c]);
        auto src = one.component(0);
        std::copy(src.begin(), src.end(), F.component(static_cast<int>(c)).begin());
    }
    return F;
}

// L^p norm of (f(. + y) - f) for all tensor components, shift applied spectrally.
double shifted_difference_norm(const SpectralField& F, const std::vector<ScalarField>& comps,
                               const Point& y, double p) {
    const auto& spec = F.spec();
    const int d = spec.dim();
    const int n = spec.n();
    std::array<std::vector<Complex>, kMaxDim> phase;
    for (int a = 0; a < d; ++a) {
        phase[a].resize(n);
        for (int m = 0; m < n; ++m) {
            const double arg = spec.wavenumber(m) * y[a];
            phase[a][m] = spec.is_nyquist(m) ? Complex(std::cos(arg), 0.0)
                                             : Complex(std::cos(arg), std::sin(arg));
        }
    }
    std::vector<double> mag2(spec.points(), 0.0);
    SpectralField S(spec, 1);
    auto dst = S.component(0);
    for (int c = 0; c < F.components(); ++c) {
        auto src = F.component(c);
        for (std::size_t idx = 0; idx < spec.points(); ++idx) {
            auto m = spec.unflatten(idx);
            Complex ph = phase[0][m[0]] * phase[1][m[1]];
            if (d == 3) ph *= phase[2][m[2]];
            dst[idx] = src[idx] * ph;
        }
        auto shifted = dft_inverse_scalar(S);
        const auto& orig = comps[c];
        for (std::size_t i = 0; i < mag2.size(); ++i) {
            const double diff = shifted[i] - orig[i];
            mag2[i] += diff * diff;
        }
    }
    double s = 0.0;
    for (double m2 : mag2) s += std::pow(m2, 0.5 * p);
    return std::pow(s * spec.cell_volume(), 1.0 / p);
}

// L^p norm of the directional derivative theta . grad of every tensor component.
double directional_derivative_norm(const SpectralField& F, const Point& theta, double p) {
    const auto& spec = F.spec();
    std::vector<double> mag2(spec.points(), 0.0);
    for (int c = 0; c < F.components(); ++c) {
        SpectralField acc(spec, 1);
        auto out = acc.component(0);
        for (int a = 0; a < spec.dim(); ++a) {
            if (theta[a] == 0.0) continue;
            SpectralField one(spec, 1);
            auto src = F.component(c);
            std::copy(src.begin(), src.end(), one.component(0).begin());
            apply_derivative(one, a, 1);
            auto dd = one.component(0);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += theta[a] * dd[i];
        }
        auto g = dft_inverse_scalar(acc);
        for (std::size_t i = 0; i < mag2.size(); ++i) mag2[i] += g[i] * g[i];
    }
    double s = 0.0;
    for (double m2 : mag2) s += std::pow(m2, 0.5 * p);
    return std::pow(s * spec.cell_volume(), 1.0 / p);
}

} // namespace

BesovIndex BesovIndex::make(double p, double q, int k, double alpha) {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("Besov index: p must lie in (1, inf)");
    if (!(q >= 1.0)) throw std::invalid_argument("Besov index: q must lie in [1, inf]");
    if (k < 0) throw std::invalid_argument("Besov index: k must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("Besov index: alpha must lie strictly in (0, 1)");
    return BesovIndex{p, q, k, alpha};
}

BesovIndex BesovIndex::from_r(double p, double q, double r) {
    const double k = std::floor(r);
    return make(p, q, static_cast<int>(k), r - k);
}

SeminormQuadrature SeminormQuadrature::resolved(const GridSpec& spec) const {
    SeminormQuadrature out = *this;
    if (out.directions == 0) out.directions = default_directions(spec.dim()) * out.direction_multiplier;
    if (out.y_min == 0.0) out.y_min = spec.spacing();
    if (out.radial_nodes < 4) throw std::invalid_argument("seminorm quadrature needs at least 4 shells");
    if (out.y_min < spec.spacing() * (1.0 - 1e-12))
        throw std::invalid_argument("seminorm quadrature: y_min below grid spacing");
    if (out.y_min >= 0.5 * spec.box_length())
        throw std::invalid_argument("seminorm quadrature: y_min must be below L/2");
    if (out.directions < 4) throw std::invalid_argument("seminorm quadrature needs at least 4 directions");
    return out;
}

SeminormQuadrature SeminormQuadrature::refined(int factor) const {
    SeminormQuadrature out = *this;
    out.radial_nodes *= factor;
    if (directions == 0)
        out.direction_multiplier *= factor;
    else
        out.directions *= factor;
    return out;
}

std::string SeminormQuadrature::id() const {
    std::ostringstream os;
    os << 's' << radial_nodes << 'd' << directions << 'x' << direction_multiplier << 'y' << std::setprecision(6) << y_min;
    return os.str();
}

std::vector<Direction> direction_set(int d, int count) {
    std::vector<Direction> dirs;
    const double area = sphere_area(d);
    if (d == 2) {
        for (int i = 0; i < count; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / count;
            dirs.push_back({{std::cos(phi), std::sin(phi), 0.0}, area / count});
        }
        return dirs;
    }
    if (count == default_directions(3)) {
        // 6 axes (weight 1/15) + 8 diagonals (weight 3/40): exact through degree 5
        for (int a = 0; a < 3; ++a)
            for (double s : {-1.0, 1.0}) {
                Point u{0, 0, 0};
                u[a] = s;
                dirs.push_back({u, area / 15.0});
            }
        const double c = 1.0 / std::sqrt(3.0);
        for (int mask = 0; mask < 8; ++mask)
            dirs.push_back({{(mask & 1 ? c : -c), (mask & 2 ? c : -c), (mask & 4 ? c : -c)},
                            area * 3.0 / 40.0});
        return dirs;
    }
    const int n_theta = std::max(2, static_cast<int>(std::lround(std::sqrt(count / 2.0))));
    const int n_phi = 2 * n_theta;
    // Gauss-Legendre nodes in cos(theta) on [-1, 1]
    std::vector<double> nodes(n_theta), weights(n_theta);
    for (int i = 0; i < n_theta; ++i) {
        // Newton iteration on P_n starting from the Chebyshev guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n_theta + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n_theta; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n_theta * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n_theta; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n_theta * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    for (int i = 0; i < n_theta; ++i) {
        const double ct = nodes[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
            dirs.push_back({{st * std::cos(phi), st * std::sin(phi), ct},
                            weights[i] * 2.0 * std::numbers::pi / n_phi});
        }
    }
    return dirs;
}

double lp_norm(const ScalarField& f, double p) {
    double s = 0.0;
    for (double x : f.data()) s += std::pow(std::abs(x), p);
    return std::pow(s * f.spec().cell_volume(), 1.0 / p);
}

double lp_norm(const VectorField& v, double p) {
    const auto& spec = v.spec();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.points(); ++i) {
        double m2 = 0.0;
        for (int c = 0; c < v.components(); ++c) {
            const double x = v.component(c)[i];
            m2 += x * x;
        }
        s += std::pow(m2, 0.5 * p);
    }
    return std::pow(s * spec.cell_volume(), 1.0 / p);
}

double lp_norm(const std::vector<ScalarField>& components, double p) {
    if (components.empty()) return 0.0;
    const auto& spec = components.front().spec();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.points(); ++i) {
        double m2 = 0.0;
        for (const auto& c : components) m2 += c[i] * c[i];
        s += std::pow(m2, 0.5 * p);
    }
    return std::pow(s * spec.cell_volume(), 1.0 / p);
}

std::vector<ScalarField> derivative_tensor(const VectorField& v, int order) {
    if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
    const int d = v.spec().dim();
    std::vector<ScalarField> out;
    if (order == 0) {
        for (int c = 0; c < d; ++c) out.push_back(v.component_field(c));
        return out;
    }
    auto V = dft_forward(v);
    for (int c = 0; c < d; ++c) {
        for (int i = 0; i < d; ++i) {
            if (order == 1) {
                SpectralField one(v.spec(), 1);
                auto src = V.component(c);
                std::copy(src.begin(), src.end(), one.component(0).begin());
                apply_derivative(one, i, 1);
                out.push_back(dft_inverse_scalar(one));
                continue;
            }
            for (int j = 0; j < d; ++j) {
                SpectralField one(v.spec(), 1);
                auto src = V.component(c);
                std::copy(src.begin(), src.end(), one.component(0).begin());
                if (i == j) {
                    apply_derivative(one, i, 2);
                } else {
                    apply_derivative(one, i, 1);
                    apply_derivative(one, j, 1);
                }
                out.push_back(dft_inverse_scalar(one));
            }
        }
    }
    return out;
}

double sobolev_norm(const VectorField& v, int k, double p) {
    if (k < 0 || k > 2) throw std::invalid_argument("sobolev_norm: k must be 0, 1 or 2");
    double total = 0.0;
    for (int i = 0; i <= k; ++i) total += lp_norm(derivative_tensor(v, i), p);
    return total;
}

double besov_seminorm(const VectorField& v, const BesovIndex& idx, const SeminormQuadrature& quad_in) {
    const auto& spec = v.spec();
    const int d = spec.dim();
    if (idx.k > 2) throw std::invalid_argument("besov_seminorm: k > 2 unsupported");
    const auto quad = quad_in.resolved(spec);
    const auto dirs = direction_set(d, quad.directions);

    const auto comps = derivative_tensor(v, idx.k);
    const auto F = component_spectrum(comps);

    const double R = 0.5 * spec.box_length();
    const double log_span = std::log(R / quad.y_min);
    const double dlog = log_span / quad.radial_nodes;
    const bool sup = std::isinf(idx.q);

    double acc = 0.0;
    for (int s = 0; s < quad.radial_nodes; ++s) {
        const double rho = quad.y_min * std::exp((s + 0.5) * dlog);
        for (const auto& dir : dirs) {
            Point y{0, 0, 0};
            for (int a = 0; a < d; ++a) y[a] = rho * dir.unit[a];
            const double diff = shifted_difference_norm(F, comps, y, idx.p);
            if (sup) {
                acc = std::max(acc, diff / std::pow(rho, idx.alpha));
            } else {
                // dy = rho^{d-1} d rho dS = rho^d d(log rho) dS
                acc += dir.weight * dlog * std::pow(rho, d) * std::pow(diff, idx.q) /
                       std::pow(rho, d + idx.alpha * idx.q);
            }
        }
    }
    if (sup) return acc;

    // |y| < y_min: ||f(.+y) - f|| ~ |y| ||theta . grad f||
    const double qa = idx.q * (1.0 - idx.alpha);
    const double radial = std::pow(quad.y_min, qa) / qa;
    for (const auto& dir : dirs) {
        const double g = directional_derivative_norm(F, dir.unit, idx.p);
        acc += dir.weight * std::pow(g, idx.q) * radial;
    }
    return std::pow(acc, 1.0 / idx.q);
}

double besov_norm(const VectorField& v, const BesovIndex& idx, const SeminormQuadrature& quad) {
    return sobolev_norm(v, idx.k, idx.p) + besov_seminorm(v, idx, quad);
}

double smoothness_norm(const VectorField& v, double r, double p, double q,
                       const SeminormQuadrature& quad) {
    const double k = std::round(r);
    if (std::abs(r - k) < 1e-12) return sobolev_norm(v, static_cast<int>(k), p);
    return besov_norm(v, BesovIndex::from_r(p, q, r), quad);
}

double embedding_exponent(double p, double alpha, int d) {
    if (!(p > d)) throw std::invalid_argument("embedding_exponent requires p > d");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("embedding_exponent: alpha in (0,1)");
    const double e = 1.0 + alpha - d / p;
    if (std::abs(e - 1.0) < 1e-14) return 0.5 * (alpha + 1.0);
    return std::min(e, 1.0);
}

InterpolationReport interpolation_diagnostic(const VectorField& v, const BesovIndex& low,
                                             const BesovIndex& mid, const BesovIndex& high,
                                             const SeminormQuadrature& quad) {
    if (low.p != mid.p || low.p != high.p || low.q != mid.q || low.q != high.q)
        throw std::invalid_argument("interpolation_diagnostic: indices must share p and q");
    if (!(low.r() < mid.r() && mid.r() < high.r()))
        throw std::invalid_argument("interpolation_diagnostic: need r_low < r_mid < r_high");
    InterpolationReport rep;
    rep.theta = (high.r() - mid.r()) / (high.r() - low.r());
    rep.norm_low = besov_norm(v, low, quad);
    rep.norm_mid = besov_norm(v, mid, quad);
    rep.norm_high = besov_norm(v, high, quad);
    const double denom = std::pow(rep.norm_low, rep.theta) * std::pow(rep.norm_high, 1.0 - rep.theta);
    rep.ratio = denom > 0.0 ? rep.norm_mid / denom : 0.0;
    return rep;
}

void write_norm_csv_row(std::ostream& os, const std::string& field_id, const BesovIndex& idx,
                        double value, const SeminormQuadrature& quad) {
    os << field_id << ',' << std::setprecision(17) << idx.p << ',' << idx.q << ',' << idx.r() << ','
       << value << ',' << quad.id() << '\n';
}

} // namespace fbsde
