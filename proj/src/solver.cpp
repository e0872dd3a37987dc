#include "fbsde_ns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbsde_ns/spectral_ops.hpp"

namespace fbsde {

namespace {

double max_speed(const VectorField& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.spec().points(); ++i) {
        const Point p = v.at(i);
        worst = std::max(worst, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    return worst;
}

double max_speed(const TimeIndexedField& v) {
    double worst = 0.0;
    for (const auto& s : v.snapshots()) worst = std::max(worst, max_speed(s));
    return worst;
}

void check_cfl(double dt, double speed, double h, const char* who) {
    if (dt * speed / h > 0.8 + 1e-12) {
        std::ostringstream msg;
        msg << who << ": dt = " << dt << " violates the advective CFL limit 0.8 h / max|v| = " << 0.8 * h / speed;
        throw std::invalid_argument(msg.str());
    }
}

// One integrating-factor RK4 step of du/dt = nu Lap u + rhs(t, u).
template <typename Rhs>
VectorField ifrk4_step(const VectorField& u, double t, double dt, double nu, const Rhs& rhs) {
    const auto E = [&](const VectorField& f) { return heat_semigroup(f, nu, 0.5 * dt); };
    const auto a = rhs(t, u);
    const auto b = rhs(t + 0.5 * dt, E(u + (0.5 * dt) * a));
    const auto Eu = E(u);
    const auto c = rhs(t + 0.5 * dt, Eu + (0.5 * dt) * b);
    const auto EEu = E(Eu);
    const auto dd = rhs(t + dt, EEu + dt * E(c));
    auto out = EEu;
    auto incr = E(E(a)) + 2.0 * E(b + c);
    incr += dd;
    out += (dt / 6.0) * incr;
    return out;
}

} // namespace

std::string to_string(MapScheme s) { return s == MapScheme::mc_drifted ? "mc_drifted" : "mild"; }

MapScheme parse_map_scheme(const std::string& s) {
    if (s == "mc_drifted") return MapScheme::mc_drifted;
    if (s == "mild") return MapScheme::mild;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected mc_drifted or mild)");
}

std::string to_string(Integrator s) { return s == Integrator::euler_maruyama ? "euler_maruyama" : "heun"; }

Integrator parse_integrator(const std::string& s) {
    if (s == "euler_maruyama") return Integrator::euler_maruyama;
    if (s == "heun") return Integrator::heun;
    throw std::invalid_argument("unknown integrator '" + s + "' (expected euler_maruyama or heun)");
}

std::string to_string(PicardStatus s) {
    switch (s) {
    case PicardStatus::converged: return "converged";
    case PicardStatus::max_iters: return "max_iters";
    case PicardStatus::diverging: return "diverging";
    }
    return "?";
}

void SolverConfig::validate() const {
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
    if (!(T > 0.0)) throw std::invalid_argument("T must be > 0");
    if (time_steps < 1) throw std::invalid_argument("time_steps must be >= 1");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
    if (interp_refinement != 1 && interp_refinement != 2 && interp_refinement != 4)
        throw std::invalid_argument("interp_refinement must be 1, 2 or 4");
    if (mild_substeps < 1) throw std::invalid_argument("mild_substeps must be >= 1");
    if (paths < 100) throw std::invalid_argument("paths must be >= 100");
    if (batches < 2 || batches > paths) throw std::invalid_argument("batches must lie in [2, paths]");
    if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("p must lie in (1, inf)");
    if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
    if (!(smoothness > 0.0) || smoothness > 3.0) throw std::invalid_argument("smoothness must lie in (0, 3]");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
    if (scheme == MapScheme::mild && !(nu > 0.0)) throw std::invalid_argument("the mild scheme requires nu > 0");
}

int cfl_substeps(double speed, double h, double interval) {
    if (speed <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::ceil(interval * speed / (0.8 * h) - 1e-12)));
}

TimeIndexedField pde_oracle_g(const TimeIndexedField& v, const VectorField& u0, double nu, int substeps) {
    if (nu < 0.0) throw std::invalid_argument("pde_oracle_g: negative viscosity");
    if (substeps < 1) throw std::invalid_argument("pde_oracle_g: substeps must be >= 1");
    const auto grid = v.time_grid();
    const double dt = grid.dt() / substeps;
    const double speed = std::max(max_speed(v), max_speed(u0));
    check_cfl(dt, speed, v.spec().spacing(), "pde_oracle_g");
    const auto rhs = [&](double t, const VectorField& g) {
        const auto vt = v.at(t);
        auto r = pressure_gradient(vt);
        r -= advection(vt, g);
        return r;
    };
    std::vector<VectorField> out{u0};
    VectorField g = u0;
    for (int k = 0; k < grid.steps; ++k) {
        for (int j = 0; j < substeps; ++j) g = ifrk4_step(g, grid.time(k) + j * dt, dt, nu, rhs);
        g.set_time_tag(grid.time(k + 1));
        out.push_back(g);
    }
    return TimeIndexedField(grid, std::move(out));
}

TimeIndexedField evaluate_g_mild(const TimeIndexedField& v, const VectorField& u0, double nu, int substeps) {
    if (!(nu > 0.0)) throw std::invalid_argument("evaluate_g_mild: requires nu > 0");
    if (substeps < 1) throw std::invalid_argument("evaluate_g_mild: substeps must be >= 1");
    const auto grid = v.time_grid();
    const double dt = grid.dt() / substeps;
    // R = v.grad g - F_v
    const auto R = [&](double t, const VectorField& g) {
        const auto vt = v.at(t);
        auto r = advection(vt, g);
        r -= pressure_gradient(vt);
        return r;
    };
    std::vector<VectorField> out{u0};
    VectorField g = u0;
    for (int k = 0; k < grid.steps; ++k) {
        for (int j = 0; j < substeps; ++j) {
            const double t = grid.time(k) + j * dt;
            const auto Eg = heat_semigroup(g, nu, dt);
            const auto ER = heat_semigroup(R(t, g), nu, dt);
            VectorField next = Eg - dt * ER;
            int sweep = 0;
            for (;; ++sweep) {
                if (sweep == 50)
                    throw MildDivergence("evaluate_g_mild: inner sweeps did not settle within 50 iterations");
                VectorField trial = Eg - (0.5 * dt) * (ER + R(t + dt, next));
                const double change = max_abs((trial - next).data());
                next = std::move(trial);
                require_finite(next.data(), "mild iterate");
                if (change <= 1e-10) break;
            }
            g = std::move(next);
        }
        g.set_time_tag(grid.time(k + 1));
        out.push_back(g);
    }
    return TimeIndexedField(grid, std::move(out));
}

std::vector<double> divergence_diagnostic(const TimeIndexedField& g, double p) {
    std::vector<double> out;
    for (const auto& s : g.snapshots()) out.push_back(lp_norm(divergence(s), p));
    return out;
}

namespace {

MapResult finish_map(TimeIndexedField g, double p) {
    std::vector<VectorField> projected;
    for (const auto& s : g.snapshots()) projected.push_back(leray_project(s));
    MapResult r{TimeIndexedField(g.time_grid(), std::move(projected)), g, divergence_diagnostic(g, p), {}, {}, {}};
    return r;
}

} // namespace

MapResult apply_I_nu(const TimeIndexedField& v, const SolverConfig& cfg, std::uint64_t seed) {
    const auto est = evaluate_g_mc(v, v[0], cfg, seed);
    auto r = finish_map(est.g, cfg.p);
    r.divergence_std_error = est.functional_std_error([](const VectorField& f) { return divergence(f); }, cfg.p);
    r.std_error_l2 = est.std_error_l2;
    r.std_error = est.std_error;
    return r;
}

MapResult apply_I_prime_nu(const TimeIndexedField& v, const SolverConfig& cfg) {
    auto r = finish_map(evaluate_g_mild(v, v[0], cfg.nu, cfg.mild_substeps), cfg.p);
    r.divergence_std_error.assign(v.size(), 0.0);
    r.std_error_l2.assign(v.size(), 0.0);
    r.std_error.assign(v.size(), VectorField(v.spec()));
    return r;
}

TimeIndexedField reference_ns_solve(const VectorField& u0, double nu, const TimeGrid& grid, int substeps) {
    if (nu < 0.0) throw std::invalid_argument("reference_ns_solve: negative viscosity");
    if (substeps < 1) throw std::invalid_argument("reference_ns_solve: substeps must be >= 1");
    const double dt = grid.dt() / substeps;
    const auto rhs = [](double, const VectorField& u) { return -1.0 * leray_project(advection(u, u)); };
    std::vector<VectorField> out{u0};
    out.front().set_time_tag(grid.time(0));
    VectorField u = u0;
    for (int k = 0; k < grid.steps; ++k) {
        for (int j = 0; j < substeps; ++j) {
            check_cfl(dt, max_speed(u), u.spec().spacing(), "reference_ns_solve");
            u = ifrk4_step(u, grid.time(k) + j * dt, dt, nu, rhs);
            require_finite(u.data(), "reference solution");
        }
        u.set_time_tag(grid.time(k + 1));
        out.push_back(u);
    }
    return TimeIndexedField(grid, std::move(out));
}

double monitoring_norm(const VectorField& v, const SolverConfig& cfg) {
    return smoothness_norm(v, cfg.monitoring_r(), cfg.p, cfg.q, cfg.quadrature);
}

double full_norm(const VectorField& v, const SolverConfig& cfg) {
    return smoothness_norm(v, cfg.smoothness, cfg.p, cfg.q, cfg.quadrature);
}

} // namespace fbsde
