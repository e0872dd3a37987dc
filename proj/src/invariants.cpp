#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "fbsde_ns/besov.hpp"
#include "fbsde_ns/flow.hpp"
#include "fbsde_ns/harness.hpp"
#include "fbsde_ns/rng.hpp"
#include "fbsde_ns/solver.hpp"
#include "fbsde_ns/spectral_ops.hpp"

namespace fbsde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

VectorField white_field(const GridSpec& spec, std::uint64_t seed) {
    const NormalStream rng(seed);
    VectorField v(spec);
    auto data = v.data();
    for (std::size_t i = 0; i < data.size(); ++i) rng.draws(i, 0, &data[i], 1);
    return v;
}

ScalarField scalar_of(const VectorField& v) { return v.component_field(0); }

InvariantResult below(std::string name, double measured, double threshold, std::string detail = "") {
    return {std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

InvariantResult above(std::string name, double measured, double threshold, std::string detail = "") {
    return {std::move(name), measured >= threshold, measured, threshold, std::move(detail)};
}

// grid ----------------------------------------------------------------------------

InvariantResult dft_roundtrip() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const auto f = white_field(spec, derive_seed(11, s));
        const auto back = dft_inverse_vector(dft_forward(f));
        worst = std::max(worst, max_abs_diff(back.data(), f.data()) / max_abs(f.data()));
    }
    return below("dft_roundtrip", worst, 1e-12, "100 random fields, n=16, d=3");
}

InvariantResult dft_parseval() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
        const auto f = white_field(spec, derive_seed(12, s));
        const auto F = dft_forward(f);
        double physical = 0.0, spectral = 0.0;
        for (double x : f.data()) physical += x * x;
        physical /= static_cast<double>(spec.points());
        for (const auto& c : F.coeffs()) spectral += std::norm(c);
        worst = std::max(worst, std::abs(physical - spectral) / physical);
    }
    return below("dft_parseval", worst, 1e-12);
}

InvariantResult divergence_of_constant() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    VectorField v(spec);
    const double c[3] = {1.5, -2.0, 0.25};
    for (int a = 0; a < 3; ++a)
        for (auto& x : v.component(a)) x = c[a];
    return below("divergence_of_constant", max_abs(divergence(v).data()), 0.0);
}

InvariantResult interpolation_nodes() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = random_band_limited(spec, 13, 7, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < spec.points(); i += 37) {
        const Point x = spec.node(i);
        const Point lin = interpolate(v, x, InterpolationMode::multilinear);
        const Point tri = interpolate(v, x, InterpolationMode::trigonometric);
        const Point exact = v.at(i);
        for (int a = 0; a < 3; ++a) {
            worst = std::max(worst, std::abs(lin[a] - exact[a]) / max_abs(v.data()));
            worst = std::max(worst, std::abs(tri[a] - exact[a]) / max_abs(v.data()));
        }
    }
    return below("interpolation_nodes", worst, 1e-12, "both modes, relative to max |v|");
}

InvariantResult interpolation_order() {
    const auto error = [](int n) {
        const auto spec = GridSpec::make(2, n, kTwoPi);
        ScalarField f(spec);
        for (std::size_t i = 0; i < spec.points(); ++i) {
            const Point x = spec.node(i);
            f[i] = std::cos(3.0 * x[0] + 2.0 * x[1]);
        }
        const NormalStream rng(14);
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            double u[2];
            rng.draws(k, 0, u, 2);
            const Point x{std::abs(std::fmod(u[0] * 2.0, kTwoPi)), std::abs(std::fmod(u[1] * 2.0, kTwoPi)), 0.0};
            worst = std::max(worst, std::abs(interpolate(f, x) - std::cos(3.0 * x[0] + 2.0 * x[1])));
        }
        return worst;
    };
    return above("interpolation_order", error(32) / error(64), 3.5, "max error ratio n=32 over n=64");
}

InvariantResult hermitian_symmetry() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = white_field(spec, 15);
    double worst = 0.0;
    auto F = dft_forward(v);
    MultiplierOp::heat(0.3).apply(F);
    worst = std::max(worst, F.hermitian_defect());
    MultiplierOp::inverse_laplacian().apply(F);
    worst = std::max(worst, F.hermitian_defect());
    leray_project_spectral(F);
    worst = std::max(worst, F.hermitian_defect());
    for (int a = 0; a < 3; ++a) {
        auto D = dft_forward(v);
        apply_derivative(D, a, 1);
        worst = std::max(worst, D.hermitian_defect());
    }
    return below("hermitian_symmetry", worst, 1e-12, "heat, inverse Laplacian, Leray, first derivatives");
}

// spectral_ops ---------------------------------------------------------------------

InvariantResult leray_divergence() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto v = random_band_limited(spec, derive_seed(21, s), 7, false);
        worst = std::max(worst, lp_norm(divergence(leray_project(v)), 2.0));
    }
    return below("leray_divergence", worst, 1e-10, "discrete L2");
}

InvariantResult leray_idempotence() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto v = random_band_limited(spec, derive_seed(22, s), 7, false);
        const auto Pv = leray_project(v);
        worst = std::max(worst, lp_norm(leray_project(Pv) - Pv, 2.0) / std::max(1.0, lp_norm(Pv, 2.0)));
    }
    return below("leray_idempotence", worst, 1e-12, "||P(Pv) - Pv|| / max(1, ||Pv||)");
}

InvariantResult gradient_part_curl_free() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto v = random_band_limited(spec, derive_seed(23, s), 7, false);
        worst = std::max(worst, lp_norm(curl(v - leray_project(v)), 2.0));
    }
    return below("gradient_part_curl_free", worst, 1e-10);
}

InvariantResult newton_inverse() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto f = scalar_of(random_band_limited(spec, derive_seed(24, s), 7, false));
        auto target = f;
        const double mean = f.mean();
        for (auto& x : target.data()) x -= mean;
        const auto back = laplacian(newton_potential(f));
        double e = 0.0;
        for (std::size_t i = 0; i < spec.points(); ++i) e = std::max(e, std::abs(back[i] - target[i]));
        worst = std::max(worst, e);
    }
    return below("newton_inverse", worst, 1e-10, "max |Lap N f - (f - mean f)|");
}

InvariantResult pressure_divergence() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto v = random_band_limited(spec, derive_seed(25, s), 7, true);
        const auto divF = divergence(pressure_gradient(v));
        const auto G = nonlinear_source(v);
        const double mean = G.mean();
        double e = 0.0;
        for (std::size_t i = 0; i < spec.points(); ++i) e = std::max(e, std::abs(divF[i] - (G[i] - mean)));
        worst = std::max(worst, e);
    }
    return below("pressure_divergence", worst, 1e-9);
}

double grad_sup(const VectorField& v) {
    double worst = 0.0;
    for (const auto& g : gradient_tensor(v)) worst = std::max(worst, max_abs(g.data()));
    return worst;
}

InvariantResult pressure_bound_ratio() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    std::vector<double> ratios;
    for (int s = 0; s < 50; ++s) {
        const auto v = random_band_limited(spec, derive_seed(26, s), 5, true);
        ratios.push_back(lp_norm(pressure_gradient(v), 4.0) / (grad_sup(v) * lp_norm(v, 4.0)));
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double worst = sorted.back();
    std::ostringstream detail;
    detail << "max " << worst << ", median " << median;
    return below("pressure_bound_ratio", worst / median, 10.0, detail.str());
}

InvariantResult pressure_bilinearity() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = random_band_limited(spec, 27, 7, true);
    const double lambda = 2.5;
    const auto a = pressure_gradient(lambda * v);
    const auto b = (lambda * lambda) * pressure_gradient(v);
    return below("pressure_bilinearity", max_abs_diff(a.data(), b.data()) / max_abs(b.data()), 1e-12);
}

InvariantResult pressure_lipschitz() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto constant = [&](double scale) {
        double worst = 0.0;
        for (int s = 0; s < 10; ++s) {
            const auto v1 = scale * random_band_limited(spec, derive_seed(28, 2 * s), 5, true);
            const auto v2 = scale * random_band_limited(spec, derive_seed(28, 2 * s + 1), 5, true);
            const double lhs = sobolev_norm(pressure_gradient(v1) - pressure_gradient(v2), 1, 4.0);
            const double rhs =
                std::max(sobolev_norm(v1, 2, 4.0), sobolev_norm(v2, 2, 4.0)) * sobolev_norm(v1 - v2, 1, 4.0);
            worst = std::max(worst, lhs / rhs);
        }
        return worst;
    };
    const double c1 = constant(1.0), c3 = constant(3.0);
    std::ostringstream detail;
    detail << "C = " << c1;
    return below("pressure_lipschitz", std::abs(c3 / c1 - 1.0), 1e-10, detail.str());
}

// flow ----------------------------------------------------------------------------

TimeIndexedField cellular_flow(int n, double T, int steps) {
    const auto spec = GridSpec::make(3, n, kTwoPi);
    return TimeIndexedField::constant(TimeGrid::make(0.0, T, steps), taylor_green(spec, 1.0));
}

std::vector<Point> sample_points(int count, std::uint64_t seed) {
    const NormalStream rng(seed);
    std::vector<Point> out;
    for (int i = 0; i < count; ++i) {
        double u[3];
        rng.draws(i, 0, u, 3);
        out.push_back({std::abs(std::fmod(u[0] * 3.0, kTwoPi)), std::abs(std::fmod(u[1] * 3.0, kTwoPi)),
                       std::abs(std::fmod(u[2] * 3.0, kTwoPi))});
    }
    return out;
}

InvariantResult seed_determinism() {
    const auto v = cellular_flow(16, 0.25, 2);
    const auto starts = sample_points(16, 31);
    const auto grid = TimeGrid::make(0.0, 0.25, 8);
    const auto a = simulate(v, FlowScheme::drifted, 0.05, starts, grid, 64, 99);
    const auto b = simulate(v, FlowScheme::drifted, 0.05, starts, grid, 64, 99);
    const bool same = a.positions == b.positions && a.increments == b.increments;
    return {"seed_determinism", same, same ? 0.0 : 1.0, 0.0, "bitwise comparison of two ensembles"};
}

InvariantResult brownian_moments() {
    const auto v = cellular_flow(16, 0.25, 1);
    const auto grid = TimeGrid::make(0.0, 0.25, 4);
    const int M = 100000;
    const auto e = simulate(v, FlowScheme::brownian, 0.05, {Point{1.0, 2.0, 3.0}}, grid, M, 32);
    const double dt = grid.dt();
    double worst = 0.0;
    for (int k = 0; k < grid.steps; ++k)
        for (int a = 0; a < 3; ++a) {
            double sum = 0.0, sq = 0.0;
            for (int m = 0; m < M; ++m) {
                const double x = e.increment(m, k)[a];
                sum += x;
                sq += x * x;
            }
            const double mean = sum / M;
            const double var = (sq - M * mean * mean) / (M - 1);
            worst = std::max(worst, std::abs(mean) / std::sqrt(dt / M));
            worst = std::max(worst, std::abs(var - dt) / (dt * std::sqrt(2.0 / (M - 1))));
        }
    return below("brownian_moments", worst, 4.0, "largest z-score of per-step mean and variance, M=1e5");
}

double determinant_defect(int steps) {
    const auto v = cellular_flow(16, 0.25, 2);
    const auto e = simulate(v, FlowScheme::drifted, 0.05, sample_points(8, 33), TimeGrid::make(0.0, 0.25, steps), 4, 5);
    double worst = 0.0;
    for (double det : jacobian_determinant(flow_gradient(v, e))) worst = std::max(worst, std::abs(det - 1.0));
    return worst;
}

InvariantResult volume_preservation() {
    const double coarse = determinant_defect(16), fine = determinant_defect(32);
    std::ostringstream detail;
    detail << "max |det - 1| = " << coarse << " (dt), " << fine << " (dt/2)";
    InvariantResult r = below("volume_preservation", coarse, 1e-4, detail.str());
    r.pass = r.pass && (fine == 0.0 || coarse / fine >= 2.0);
    return r;
}

double operator_norm(const double* J, int d) {
    // power iteration on J^T J
    double x[3] = {1.0, 0.7, 0.3}, y[3];
    double lambda = 0.0;
    for (int it = 0; it < 100; ++it) {
        double Jx[3] = {0, 0, 0};
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) Jx[a] += J[a * d + b] * x[b];
        for (int b = 0; b < d; ++b) {
            y[b] = 0.0;
            for (int a = 0; a < d; ++a) y[b] += J[a * d + b] * Jx[a];
        }
        double nrm = 0.0;
        for (int b = 0; b < d; ++b) nrm += y[b] * y[b];
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return 0.0;
        for (int b = 0; b < d; ++b) x[b] = y[b] / nrm;
        lambda = nrm;
    }
    return std::sqrt(lambda);
}

InvariantResult flow_regularity() {
    const double T = 0.25;
    const auto v = cellular_flow(16, T, 2);
    const auto grid = TimeGrid::make(0.0, T, 32);
    const auto e = simulate(v, FlowScheme::drifted, 0.05, sample_points(8, 34), grid, 4, 6);
    const auto g = flow_gradient(v, e);
    double lip = 0.0;
    const auto tensor = gradient_tensor(v[0]);
    const auto& spec = v.spec();
    for (std::size_t i = 0; i < spec.points(); ++i) {
        double A[9];
        for (int c = 0; c < 9; ++c) A[c] = tensor[c][i];
        lip = std::max(lip, operator_norm(A, 3));
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < g.points; ++p)
        for (int m = 0; m < g.paths; ++m)
            for (int k = 0; k <= g.steps; ++k) {
                const double bound = std::exp(lip * (grid.time(k) - grid.t0)) * (1.0 + 1e-3);
                worst = std::max(worst, operator_norm(g.at(p, m, k), 3) / bound);
            }
    return below("flow_regularity", worst, 1.0, "max ||grad X|| / (exp(||grad v|| s)(1 + 1e-3))");
}

InvariantResult change_of_variables() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = TimeIndexedField::constant(TimeGrid::make(0.0, 0.25, 2), random_band_limited(spec, 36, 3, true));
    std::vector<Point> starts;
    for (std::size_t i = 0; i < spec.points(); ++i) starts.push_back(spec.node(i));
    const int M = 16;
    const auto e = simulate(v, FlowScheme::drifted, 0.05, starts, TimeGrid::make(0.0, 0.25, 8), M, 35);
    const auto h = [](const double* x) { return std::cos(x[0] + 2.0 * x[1] - x[2]) + std::sin(x[1]) * std::cos(x[2]) + 0.5; };
    const double exact = 0.5;
    const int K = e.steps();
    std::vector<double> per_path(M, 0.0), per_path_half(M, 0.0);
    for (std::size_t p = 0; p < starts.size(); ++p)
        for (int m = 0; m < M; ++m) {
            const Point x = e.position(p, m, K);
            const double val = h(x.data());
            per_path[m] += val / starts.size();
            if (p % 2 == 0) per_path_half[m] += 2.0 * val / starts.size();
        }
    double mean = 0.0, mean_half = 0.0;
    for (int m = 0; m < M; ++m) {
        mean += per_path[m] / M;
        mean_half += per_path_half[m] / M;
    }
    double var = 0.0;
    for (int m = 0; m < M; ++m) var += (per_path[m] - mean) * (per_path[m] - mean);
    const double se = std::sqrt(var / (M - 1) / M);
    const double quad = std::abs(mean_half - mean);
    std::ostringstream detail;
    detail << "MC stderr " << se << ", quadrature " << quad;
    return below("change_of_variables", std::abs(mean - exact), 4.0 * (se + quad) + 1e-12, detail.str());
}

// besov ----------------------------------------------------------------------------

InvariantResult besov_triangle() {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto idx = BesovIndex::from_r(4.0, 4.0, 1.5);
    double worst = -kInf;
    for (int s = 0; s < 100; ++s) {
        const auto a = random_band_limited(spec, derive_seed(41, 2 * s), 5, false);
        const auto b = random_band_limited(spec, derive_seed(41, 2 * s + 1), 5, false);
        worst = std::max(worst, besov_norm(a + b, idx) - besov_norm(a, idx) - besov_norm(b, idx));
    }
    return below("besov_triangle", worst, 1e-10, "largest ||a+b|| - ||a|| - ||b||, 100 pairs");
}

InvariantResult besov_constants() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto idx = BesovIndex::from_r(4.0, 4.0, 1.5);
    VectorField c(spec);
    for (int a = 0; a < 3; ++a)
        for (auto& x : c.component(a)) x = 0.5 + a;
    const double zero = besov_seminorm(c, BesovIndex::from_r(4.0, 4.0, 0.5));
    const double nonzero = besov_seminorm(random_band_limited(spec, 42, 5, false), idx);
    InvariantResult r = below("besov_constants", zero, 1e-12, "seminorm of a constant; positive on a mode field");
    r.pass = r.pass && nonzero > 1e-3;
    return r;
}

InvariantResult besov_refinement() {
    double worst = 0.0;
    for (int d : {2, 3}) {
        const auto spec = GridSpec::make(d, d == 2 ? 32 : 16, kTwoPi);
        const auto v = random_band_limited(spec, derive_seed(43, d), spec.n() / 4, true);
        for (double r : {0.5, 1.5, 2.5}) {
            const auto idx = BesovIndex::from_r(4.0, 4.0, r);
            const SeminormQuadrature q;
            const double a = besov_seminorm(v, idx, q), b = besov_seminorm(v, idx, q.refined(2));
            worst = std::max(worst, std::abs(a - b) / b);
        }
    }
    return below("besov_refinement", worst, 0.02, "relative change under 2x refinement");
}

InvariantResult besov_mode_scaling() {
    const auto spec = GridSpec::make(2, 64, kTwoPi);
    double worst = 0.0;
    for (double r : {0.5, 1.5, 2.5}) {
        const auto idx = BesovIndex::from_r(4.0, 4.0, r);
        double base = 0.0;
        for (int m : {1, 2, 4, 8}) {
            VectorField v(spec);
            for (std::size_t i = 0; i < spec.points(); ++i) v.component(0)[i] = std::cos(m * spec.node(i)[0]);
            const double s = besov_seminorm(v, idx);
            if (m == 1) base = s;
            worst = std::max(worst, std::abs(s / base / std::pow(m, r) - 1.0));
        }
    }
    return below("besov_mode_scaling", worst, 0.10, "seminorm of cos(m x1) against m^(k+alpha), m <= 8");
}

// solver ----------------------------------------------------------------------------

SolverConfig small_solver(double nu) {
    SolverConfig cfg;
    cfg.nu = nu;
    cfg.T = 0.25;
    cfg.paths = 400;
    cfg.batches = 8;
    return cfg;
}

InvariantResult map_divergence_free() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto cfg = small_solver(0.1);
    const auto v = TimeIndexedField::constant(cfg.time_grid(), taylor_green(spec, 1.0));
    const auto out = apply_I_nu(v, cfg, 51);
    return below("map_divergence_free", out.value.max_divergence_l2(), 1e-10);
}

InvariantResult map_initial_condition() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto cfg = small_solver(0.1);
    const auto u0 = random_band_limited(spec, 52, 3, true);
    const auto v = TimeIndexedField::constant(cfg.time_grid(), u0);
    const auto out = apply_I_nu(v, cfg, 52);
    const double e = lp_norm(out.value[0] - u0, 2.0);
    return below("map_initial_condition", e, std::max(4.0 * out.std_error_l2[0], 1e-8));
}

InvariantResult mc_pde_duality() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    auto cfg = small_solver(0.05);
    cfg.paths = 4000;
    cfg.interp_refinement = 4;
    const auto u0 = taylor_green(spec, 1.0);
    const auto v = TimeIndexedField::constant(cfg.time_grid(), u0);
    const auto est = evaluate_g_mc(v, u0, cfg, 53);
    const auto ref = pde_oracle_g(v, u0, cfg.nu, 16);
    double worst = 0.0;
    for (int k = 1; k < ref.size(); ++k)
        worst = std::max(worst, lp_norm(est.g[k] - ref[k], 2.0) / est.std_error_l2[k]);
    return below("mc_pde_duality", worst, 4.0, "largest L2 error in units of the MC standard error");
}

InvariantResult scheme_cross_agreement() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    auto cfg = small_solver(0.1);
    cfg.paths = 2000;
    cfg.interp_refinement = 4;
    PicardOptions opt;
    opt.compute_full_residual = false;
    const auto u0 = taylor_green(spec, 1.0);
    const auto mc = picard_solve(u0, cfg, opt);
    cfg.scheme = MapScheme::mild;
    const auto mild = picard_solve(u0, cfg, opt);
    if (mc.horizon != mild.horizon) return {"scheme_cross_agreement", false, kInf, 0.0, "horizons differ"};
    const double diff = sup_l2_difference(mc.solution(), mild.solution());
    const double se = *std::max_element(mc.std_error_history.begin(), mc.std_error_history.end());
    return below("scheme_cross_agreement", diff, std::max(4.0 * se, 1e-3), "sup_t L2, nu = 0.1");
}

InvariantResult picard_trivial() {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto cfg = small_solver(0.1);
    PicardOptions opt;
    opt.compute_full_residual = false;
    const auto zero = picard_solve(VectorField(spec), cfg, opt);
    VectorField c(spec);
    for (int a = 0; a < 3; ++a)
        for (auto& x : c.component(a)) x = 0.3 * (a + 1);
    const auto constant = picard_solve(c, cfg, opt);
    double e = max_abs(zero.solution()[zero.solution().size() - 1].data());
    for (const auto& s : constant.solution().snapshots()) e = std::max(e, max_abs_diff(s.data(), c.data()));
    const bool ok = zero.status == PicardStatus::converged && zero.residuals.size() == 1 &&
                    constant.status == PicardStatus::converged && constant.residuals.size() == 1;
    InvariantResult r = below("picard_trivial", e, 1e-12, "u0 = 0 and u0 = c converge at the first iteration");
    r.pass = r.pass && ok;
    return r;
}

// harness ---------------------------------------------------------------------------

InvariantResult config_roundtrip() {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::taylor_green;
    cfg.visc_list = {0.2, 0.02, 0.002};
    cfg.solver.nu = 0.037;
    const std::string text = serialize(cfg);
    std::istringstream is(text);
    const bool ok = serialize(parse_config(is)) == text && normalize(text) == text;
    return {"config_roundtrip", ok, ok ? 0.0 : 1.0, 0.0, "serialize(parse(x)) == normalize(x) == x"};
}

using Check = std::function<InvariantResult()>;

const std::vector<std::pair<std::string, Check>>& registry() {
    static const std::vector<std::pair<std::string, Check>> table = {
        {"dft_roundtrip", dft_roundtrip},
        {"dft_parseval", dft_parseval},
        {"divergence_of_constant", divergence_of_constant},
        {"interpolation_nodes", interpolation_nodes},
        {"interpolation_order", interpolation_order},
        {"hermitian_symmetry", hermitian_symmetry},
        {"leray_divergence", leray_divergence},
        {"leray_idempotence", leray_idempotence},
        {"gradient_part_curl_free", gradient_part_curl_free},
        {"newton_inverse", newton_inverse},
        {"pressure_divergence", pressure_divergence},
        {"pressure_bound_ratio", pressure_bound_ratio},
        {"pressure_bilinearity", pressure_bilinearity},
        {"pressure_lipschitz", pressure_lipschitz},
        {"seed_determinism", seed_determinism},
        {"brownian_moments", brownian_moments},
        {"volume_preservation", volume_preservation},
        {"flow_regularity", flow_regularity},
        {"change_of_variables", change_of_variables},
        {"besov_triangle", besov_triangle},
        {"besov_constants", besov_constants},
        {"besov_refinement", besov_refinement},
        {"besov_mode_scaling", besov_mode_scaling},
        {"map_divergence_free", map_divergence_free},
        {"map_initial_condition", map_initial_condition},
        {"mc_pde_duality", mc_pde_duality},
        {"scheme_cross_agreement", scheme_cross_agreement},
        {"picard_trivial", picard_trivial},
        {"config_roundtrip", config_roundtrip},
    };
    return table;
}

} // namespace

std::vector<std::string> invariant_names() {
    std::vector<std::string> out;
    for (const auto& [name, check] : registry()) out.push_back(name);
    return out;
}

std::vector<InvariantResult> run_invariants(const std::vector<std::string>& selection, double leray_corruption) {
    const bool all = std::find(selection.begin(), selection.end(), "all") != selection.end();
    for (const auto& name : selection) {
        if (name == "all") continue;
        const auto& names = invariant_names();
        if (std::find(names.begin(), names.end(), name) == names.end())
            throw std::invalid_argument("unknown invariant '" + name + "'");
    }
    struct Restore {
        double previous = testing::leray_corruption();
        ~Restore() { testing::set_leray_corruption(previous); }
    } restore;
    testing::set_leray_corruption(leray_corruption);
    std::vector<InvariantResult> out;
    for (const auto& [name, check] : registry()) {
        if (!all && std::find(selection.begin(), selection.end(), name) == selection.end()) continue;
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back({name, false, kInf, 0.0, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

} // namespace fbsde
