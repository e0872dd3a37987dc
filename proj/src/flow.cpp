#include "fbsde_ns/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fbsde_ns/parallel.hpp"
#include "fbsde_ns/rng.hpp"

namespace fbsde {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

double max_speed(const TimeIndexedField& v) {
    double worst = 0.0;
    for (const auto& snap : v.snapshots()) {
        require_finite(snap.data(), "drift velocity");
        const std::size_t np = snap.spec().points();
        for (std::size_t i = 0; i < np; ++i) {
            const Point p = snap.at(i);
            worst = std::max(worst, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
        }
    }
    return worst;
}

// Gradient-tensor sampler: channel c * d + a holds d_c v^a.
PackedSampler gradient_sampler(const TimeIndexedField& v, double t) {
    const auto snap = v.at(t);
    const int d = snap.components();
    const auto tensor = gradient_tensor(snap);
    PackedSampler s(snap.spec(), d * d);
    for (int c = 0; c < d * d; ++c) s.load(tensor[c], c);
    return s;
}

// out = -A J with A(a, c) = d_c v^a read from the packed tensor sample.
void rhs(int d, const double* tensor, const double* J, double* out) {
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double acc = 0.0;
            for (int c = 0; c < d; ++c) acc += tensor[c * d + a] * J[c * d + b];
            out[a * d + b] = -acc;
        }
}

} // namespace

std::string to_string(FlowScheme s) {
    switch (s) {
    case FlowScheme::drifted: return "drifted";
    case FlowScheme::brownian: return "brownian";
    case FlowScheme::deterministic: return "deterministic";
    }
    return "?";
}

FlowScheme parse_flow_scheme(const std::string& s) {
    if (s == "drifted") return FlowScheme::drifted;
    if (s == "brownian") return FlowScheme::brownian;
    if (s == "deterministic") return FlowScheme::deterministic;
    throw std::invalid_argument("unknown flow scheme '" + s + "'");
}

Point PathEnsemble::position(std::size_t point, int path, int k) const {
    Point p{0, 0, 0};
    const double* src = positions.data() + ((point * paths + path) * (grid.steps + 1) + k) * dim;
    for (int a = 0; a < dim; ++a) p[a] = src[a];
    return p;
}

Point PathEnsemble::increment(int path, int k) const {
    Point p{0, 0, 0};
    const double* src = increments.data() + (static_cast<std::size_t>(path) * grid.steps + k) * dim;
    for (int a = 0; a < dim; ++a) p[a] = src[a];
    return p;
}

double stability_bound(const TimeIndexedField& v) {
    const double speed = max_speed(v);
    if (speed == 0.0) return std::numeric_limits<double>::infinity();
    return v.spec().spacing() / (2.0 * speed);
}

PackedSampler velocity_sampler(const TimeIndexedField& v, double t) {
    PackedSampler s(v.spec(), v.spec().dim());
    s.load(v.at(t), 0);
    return s;
}

Point minimal_image(const Point& a, const Point& b, double L, int d) {
    Point r{0, 0, 0};
    for (int i = 0; i < d; ++i) {
        double x = b[i] - a[i];
        x -= L * std::round(x / L);
        r[i] = x;
    }
    return r;
}

PathEnsemble simulate(const TimeIndexedField& v, FlowScheme scheme, double nu,
                      const std::vector<Point>& starts, const TimeGrid& path_grid, int paths,
                      std::uint64_t seed) {
    const auto& spec = v.spec();
    const int d = spec.dim();
    const double L = spec.box_length();
    const double horizon = v.time_grid().T;
    if (paths < 1) throw std::invalid_argument("simulate: need at least one path");
    if (nu < 0.0) throw std::invalid_argument("simulate: negative viscosity");
    if (scheme == FlowScheme::deterministic && nu != 0.0)
        throw std::invalid_argument("simulate: deterministic scheme requires nu = 0");
    if (path_grid.t0 < v.time_grid().t0 - 1e-12 || path_grid.T > horizon + 1e-12)
        throw std::invalid_argument("simulate: path grid outside the velocity's time range");
    const double dt = path_grid.dt();
    if (scheme != FlowScheme::brownian) {
        const double bound = stability_bound(v);
        if (dt > bound) {
            std::ostringstream msg;
            msg << "simulate: dt = " << dt << " exceeds the stability bound h/(2 max|v|) = " << bound;
            throw std::invalid_argument(msg.str());
        }
    }
    for (const auto& x : starts)
        for (int a = 0; a < d; ++a)
            if (!std::isfinite(x[a])) throw std::invalid_argument("simulate: non-finite start point");

    PathEnsemble e;
    e.scheme = scheme;
    e.nu = nu;
    e.horizon = horizon;
    e.grid = path_grid;
    e.dim = d;
    e.paths = paths;
    e.seed = seed;
    e.starts = starts;
    const int K = path_grid.steps;

    e.increments.resize(static_cast<std::size_t>(paths) * K * d);
    if (scheme != FlowScheme::deterministic) {
        const NormalStream noise(seed);
        const double sdt = std::sqrt(dt);
        double z[kMaxDim];
        for (int m = 0; m < paths; ++m)
            for (int k = 0; k < K; ++k) {
                noise.draws(m, k, z, d);
                double* dst = e.increments.data() + (static_cast<std::size_t>(m) * K + k) * d;
                for (int a = 0; a < d; ++a) dst[a] = sdt * z[a];
            }
    }

    // Drift samplers at the step times and, for RK4, the half steps.
    std::vector<PackedSampler> drift;
    if (scheme != FlowScheme::brownian) {
        const int stride = scheme == FlowScheme::deterministic ? 2 : 1;
        for (int j = 0; j <= stride * K; ++j)
            drift.push_back(velocity_sampler(v, horizon - (path_grid.t0 + j * dt / stride)));
    }

    const double amp = std::sqrt(2.0 * nu);
    e.positions.resize(starts.size() * paths * (K + 1) * d);
    parallel_for(starts.size() * paths, 64, [&](std::size_t begin, std::size_t end) {
        double x[kMaxDim], y[kMaxDim], k1[kMaxDim], k2[kMaxDim], k3[kMaxDim], k4[kMaxDim];
        for (std::size_t job = begin; job < end; ++job) {
            const std::size_t point = job / paths;
            const int m = static_cast<int>(job % paths);
            double* out = e.positions.data() + job * (K + 1) * d;
            const Point w = spec.wrap(starts[point]);
            for (int a = 0; a < d; ++a) x[a] = out[a] = w[a];
            for (int k = 0; k < K; ++k) {
                const double* dB = e.increments.data() + (static_cast<std::size_t>(m) * K + k) * d;
                switch (scheme) {
                case FlowScheme::brownian:
                    for (int a = 0; a < d; ++a) x[a] += amp * dB[a];
                    break;
                case FlowScheme::drifted:
                    drift[k].eval(x, k1);
                    for (int a = 0; a < d; ++a) x[a] += -k1[a] * dt + amp * dB[a];
                    break;
                case FlowScheme::deterministic:
                    drift[2 * k].eval(x, k1);
                    for (int a = 0; a < d; ++a) y[a] = wrap_coordinate(x[a] - 0.5 * dt * k1[a], L);
                    drift[2 * k + 1].eval(y, k2);
                    for (int a = 0; a < d; ++a) y[a] = wrap_coordinate(x[a] - 0.5 * dt * k2[a], L);
                    drift[2 * k + 1].eval(y, k3);
                    for (int a = 0; a < d; ++a) y[a] = wrap_coordinate(x[a] - dt * k3[a], L);
                    drift[2 * k + 2].eval(y, k4);
                    for (int a = 0; a < d; ++a) x[a] -= dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                    break;
                }
                for (int a = 0; a < d; ++a) {
                    x[a] = wrap_coordinate(x[a], L);
                    out[(k + 1) * d + a] = x[a];
                }
            }
        }
    });
    return e;
}

FlowGradient flow_gradient(const TimeIndexedField& v, const PathEnsemble& ens) {
    if (v.spec().dim() != ens.dim) throw std::invalid_argument("flow_gradient: dimension mismatch");
    if (std::abs(v.time_grid().T - ens.horizon) > 1e-12)
        throw std::invalid_argument("flow_gradient: velocity horizon differs from the ensemble's");
    const int d = ens.dim;
    const int K = ens.steps();
    const double dt = ens.grid.dt();
    const double L = v.spec().box_length();

    FlowGradient g;
    g.dim = d;
    g.paths = ens.paths;
    g.steps = K;
    g.points = ens.points();
    g.matrices.assign(g.points * g.paths * (K + 1) * d * d, 0.0);

    std::vector<PackedSampler> tensor;
    if (ens.scheme != FlowScheme::brownian)
        for (int j = 0; j <= 2 * K; ++j)
            tensor.push_back(gradient_sampler(v, ens.horizon - (ens.grid.t0 + j * dt / 2)));

    parallel_for(g.points * g.paths, 64, [&](std::size_t begin, std::size_t end) {
        double A0[9], Am[9], A1[9], J[9], Y[9], r1[9], r2[9], r3[9], r4[9];
        double xk[kMaxDim], xm[kMaxDim], xn[kMaxDim];
        for (std::size_t job = begin; job < end; ++job) {
            const std::size_t point = job / ens.paths;
            const int m = static_cast<int>(job % ens.paths);
            double* out = g.matrices.data() + job * (K + 1) * d * d;
            for (int a = 0; a < d; ++a) out[a * d + a] = 1.0;
            std::copy(out, out + d * d, J);
            for (int k = 0; k < K; ++k) {
                if (ens.scheme != FlowScheme::brownian) {
                    const Point pk = ens.position(point, m, k);
                    const Point pn = ens.position(point, m, k + 1);
                    const Point step = minimal_image(pk, pn, L, d);
                    for (int a = 0; a < d; ++a) {
                        xk[a] = pk[a];
                        xn[a] = pn[a];
                        xm[a] = wrap_coordinate(pk[a] + 0.5 * step[a], L);
                    }
                    tensor[2 * k].eval(xk, A0);
                    tensor[2 * k + 1].eval(xm, Am);
                    tensor[2 * k + 2].eval(xn, A1);
                    rhs(d, A0, J, r1);
                    for (int i = 0; i < d * d; ++i) Y[i] = J[i] + 0.5 * dt * r1[i];
                    rhs(d, Am, Y, r2);
                    for (int i = 0; i < d * d; ++i) Y[i] = J[i] + 0.5 * dt * r2[i];
                    rhs(d, Am, Y, r3);
                    for (int i = 0; i < d * d; ++i) Y[i] = J[i] + dt * r3[i];
                    rhs(d, A1, Y, r4);
                    for (int i = 0; i < d * d; ++i) J[i] += dt / 6.0 * (r1[i] + 2.0 * r2[i] + 2.0 * r3[i] + r4[i]);
                }
                std::copy(J, J + d * d, out + (k + 1) * d * d);
            }
        }
    });
    return g;
}

std::vector<double> jacobian_determinant(const FlowGradient& g) {
    const int d = g.dim;
    const std::size_t count = g.matrices.size() / (d * d);
    std::vector<double> det(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double* m = g.matrices.data() + i * d * d;
        if (d == 2)
            det[i] = m[0] * m[3] - m[1] * m[2];
        else
            det[i] = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
    return det;
}

GradientEstimate bel_gradient(const std::function<double(const Point&)>& f, int d, const Point& x,
                              double t, double s, double nu, int paths, std::uint64_t seed) {
    if (!(s > t)) throw std::invalid_argument("bel_gradient: requires s > t (the weight is singular at s = t)");
    if (!(nu > 0.0)) throw std::invalid_argument("bel_gradient: requires nu > 0");
    if (paths < 2) throw std::invalid_argument("bel_gradient: need at least two paths");
    const NormalStream noise(seed);
    const double tau = s - t;
    const double amp = std::sqrt(2.0 * nu);
    const double scale = 1.0 / (amp * tau);
    std::vector<double> w(static_cast<std::size_t>(paths) * d);
    double z[kMaxDim];
    for (int m = 0; m < paths; ++m) {
        noise.draws(m, 0, z, d);
        Point y = x;
        double dB[kMaxDim];
        for (int a = 0; a < d; ++a) {
            dB[a] = std::sqrt(tau) * z[a];
            y[a] += amp * dB[a];
        }
        const double fy = f(y);
        for (int a = 0; a < d; ++a) w[static_cast<std::size_t>(a) * paths + m] = fy * dB[a] * scale;
    }
    GradientEstimate out;
    std::vector<double> sq(paths);
    for (int a = 0; a < d; ++a) {
        const double* wa = w.data() + static_cast<std::size_t>(a) * paths;
        const double mean = pairwise_sum(wa, paths) / paths;
        for (int m = 0; m < paths; ++m) sq[m] = (wa[m] - mean) * (wa[m] - mean);
        const double var = pairwise_sum(sq.data(), paths) / (paths - 1);
        out.mean[a] = mean;
        out.std_error[a] = std::sqrt(var / paths);
    }
    return out;
}

GradientEstimate bel_gradient(const ScalarField& f, const Point& x, double t, double s, double nu,
                              int paths, std::uint64_t seed, InterpolationMode mode) {
    return bel_gradient([&](const Point& y) { return interpolate(f, y, mode); }, f.spec().dim(), x, t, s,
                        nu, paths, seed);
}

void write_pth1(std::ostream& os, const PathEnsemble& e) {
    os.write("PTH1", 4);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.scheme));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.paths));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.steps()));
    put_le<std::uint64_t>(os, e.seed);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.dim));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.points()));
    for (double x : e.positions) put_le<double>(os, x);
}

void write_pth1(const std::string& path, const PathEnsemble& e) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_pth1(os, e);
}

} // namespace fbsde
