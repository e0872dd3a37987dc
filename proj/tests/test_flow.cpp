#include <cmath>
#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "fbsde_ns/flow.hpp"
#include "fbsde_ns/harness.hpp"
#include "fbsde_ns/spectral_ops.hpp"
#include "support.hpp"

using namespace fbsde;
using fbsde::test::kTwoPi;

namespace {

TimeIndexedField steady(const VectorField& v, double T, int steps) {
    return TimeIndexedField::constant(TimeGrid::make(0.0, T, steps), v);
}

std::vector<Point> some_points(const GridSpec& spec, int count) {
    std::vector<Point> out;
    for (int i = 0; i < count; ++i) out.push_back(spec.node(static_cast<std::size_t>(i) * 37 % spec.points()));
    return out;
}

void set_threads(const char* n) { setenv("FBSDE_NS_THREADS", n, 1); }

} // namespace

TEST_CASE("constant drift is transported exactly") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const Point c{0.7, -0.3, 1.1};
    const auto v = steady(test::vector_from(spec, [&](const Point&) { return c; }), 1.0, 4);
    const auto starts = some_points(spec, 5);
    const auto grid = TimeGrid::make(0.0, 1.0, 40);
    const auto e = simulate(v, FlowScheme::deterministic, 0.0, starts, grid, 1, 0);
    for (std::size_t i = 0; i < starts.size(); ++i)
        for (int k = 0; k <= grid.steps; ++k) {
            const Point x = e.position(i, 0, k);
            const Point expect = spec.wrap({starts[i][0] - c[0] * grid.time(k), starts[i][1] - c[1] * grid.time(k),
                                            starts[i][2] - c[2] * grid.time(k)});
            const Point diff = minimal_image(expect, x, kTwoPi, 3);
            for (int a = 0; a < 3; ++a) CHECK(std::abs(diff[a]) < 1e-13);
        }
    const auto g = flow_gradient(v, e);
    for (double x : jacobian_determinant(g)) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("positions stay on the torus") {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto v = steady(taylor_green(spec, 2.0), 0.5, 2);
    const auto e = simulate(v, FlowScheme::drifted, 0.5, some_points(spec, 8), TimeGrid::make(0.0, 0.5, 20), 50, 3);
    for (double x : e.positions) {
        CHECK(std::isfinite(x));
        CHECK(x >= 0.0);
        CHECK(x < kTwoPi);
    }
}

TEST_CASE("brownian moments and increments") {
    const auto spec = GridSpec::make(3, 8, kTwoPi);
    const auto v = steady(VectorField(spec), 1.0, 1);
    const double nu = 0.2;
    const int M = 100000;
    const auto grid = TimeGrid::make(0.0, 0.5, 5);
    const Point x0{1.0, 2.0, 3.0};
    const auto e = simulate(v, FlowScheme::drifted, nu, {x0}, grid, M, 11);
    const double var = 2.0 * nu * 0.5;
    for (int a = 0; a < 3; ++a) {
        double s1 = 0.0, s2 = 0.0;
        for (int m = 0; m < M; ++m) {
            double dx = 0.0;
            for (int k = 0; k < grid.steps; ++k) dx += std::sqrt(2.0 * nu) * e.increment(m, k)[a];
            s1 += dx;
            s2 += dx * dx;
        }
        const double mean = s1 / M;
        const double emp = s2 / M - mean * mean;
        CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / M));
        CHECK(std::abs(emp - var) <= 4.0 * var * std::sqrt(2.0 / M));
    }
    // per-step increment variance
    double s2 = 0.0;
    for (int m = 0; m < M; ++m) s2 += std::pow(e.increment(m, 2)[1], 2);
    CHECK(std::abs(s2 / M - grid.dt()) <= 5.0 * grid.dt() * std::sqrt(2.0 / M));
}

TEST_CASE("brownian scheme ignores the drift") {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto grid = TimeGrid::make(0.0, 0.5, 10);
    const auto starts = some_points(spec, 4);
    const auto tg = simulate(steady(taylor_green(spec, 1.0), 0.5, 2), FlowScheme::brownian, 0.1, starts, grid, 30, 8);
    const auto zero = simulate(steady(VectorField(spec), 0.5, 2), FlowScheme::drifted, 0.1, starts, grid, 30, 8);
    CHECK(tg.positions == zero.positions);
}

TEST_CASE("scheme preconditions") {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto v = steady(taylor_green(spec, 1.0), 1.0, 2);
    const auto starts = some_points(spec, 2);
    CHECK_THROWS_AS(simulate(v, FlowScheme::deterministic, 0.1, starts, TimeGrid::make(0, 1, 20), 1, 0), std::invalid_argument);
    try {
        simulate(v, FlowScheme::drifted, 0.1, starts, TimeGrid::make(0, 1, 2), 4, 0);
        FAIL("expected the stability bound to reject dt = 0.5");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("stability bound") != std::string::npos);
    }
    CHECK_THROWS_AS(simulate(v, FlowScheme::drifted, 0.1, {{std::nan(""), 0, 0}}, TimeGrid::make(0, 1, 20), 4, 0),
                    std::invalid_argument);
    CHECK(stability_bound(v) == doctest::Approx(spec.spacing() / 2.0).epsilon(1e-12));
}

TEST_CASE("seed determinism across thread counts") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = steady(taylor_green(spec, 1.0), 0.25, 2);
    const auto starts = some_points(spec, 40);
    const auto grid = TimeGrid::make(0.0, 0.25, 8);
    set_threads("1");
    const auto a = simulate(v, FlowScheme::drifted, 0.05, starts, grid, 64, 42);
    const auto ga = flow_gradient(v, a);
    set_threads("4");
    const auto b = simulate(v, FlowScheme::drifted, 0.05, starts, grid, 64, 42);
    const auto gb = flow_gradient(v, b);
    unsetenv("FBSDE_NS_THREADS");
    CHECK(a.positions == b.positions);
    CHECK(a.increments == b.increments);
    CHECK(ga.matrices == gb.matrices);
    const auto c = simulate(v, FlowScheme::drifted, 0.05, starts, grid, 64, 43);
    CHECK(c.positions != a.positions);
}

TEST_CASE("flow gradient of a shear is exact") {
    // v = (g sin x2, 0, 0): along x2 = 0 the gradient is the nilpotent g e1 (x) e2
    const double gamma = 0.8;
    const auto spec = GridSpec::make(3, 32, kTwoPi);
    const auto v = steady(test::vector_from(spec, [&](const Point& x) { return Point{gamma * std::sin(x[1]), 0, 0}; }), 1.0, 2);
    const std::vector<Point> starts{{0.0, 0.0, 0.0}, {1.7, 0.0, 2.0}};
    const auto grid = TimeGrid::make(0.0, 1.0, 64);
    const auto e = simulate(v, FlowScheme::deterministic, 0.0, starts, grid, 1, 0);
    const auto g = flow_gradient(v, e);
    const auto det = jacobian_determinant(g);
    for (std::size_t i = 0; i < starts.size(); ++i)
        for (int k = 0; k <= grid.steps; ++k) {
            const double* J = g.at(i, 0, k);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double expect = a == b ? 1.0 : 0.0;
                    if (a == 0 && b == 1) expect = -gamma * grid.time(k);
                    CHECK(std::abs(J[a * 3 + b] - expect) < 1e-12);
                }
            CHECK(std::abs(det[(i * (grid.steps + 1)) + k] - 1.0) < 1e-12);
        }
}

TEST_CASE("liouville formula on a compressible drift") {
    // v = (a sin x1, 0, 0): x1 = 0 is invariant and div v = a there
    const double a = 0.6;
    const auto spec = GridSpec::make(3, 32, kTwoPi);
    const auto v = steady(test::vector_from(spec, [&](const Point& x) { return Point{a * std::sin(x[0]), 0, 0}; }), 1.0, 2);
    const auto grid = TimeGrid::make(0.0, 1.0, 64);
    const auto e = simulate(v, FlowScheme::deterministic, 0.0, {{0.0, 1.0, 2.0}}, grid, 1, 0);
    const auto det = jacobian_determinant(flow_gradient(v, e));
    for (int k = 0; k <= grid.steps; ++k) CHECK(std::abs(det[k] - std::exp(-a * grid.time(k))) < 1e-3);
}

TEST_CASE("taylor-green characteristics preserve volume") {
    const auto spec = GridSpec::make(3, 32, kTwoPi);
    const auto v = steady(taylor_green(spec, 1.0), 0.5, 2);
    const auto e = simulate(v, FlowScheme::deterministic, 0.0, some_points(spec, 64), TimeGrid::make(0.0, 0.5, 32), 1, 0);
    double worst = 0.0;
    for (double x : jacobian_determinant(flow_gradient(v, e))) worst = std::max(worst, std::abs(x - 1.0));
    CHECK(worst <= 1e-4);
}

TEST_CASE("bismut-elworthy-li gradient") {
    const double nu = 0.3, t = 0.0, s = 0.5;
    const int M = 100000;
    const Point x{0.9, 2.0, 0.4};

    const auto flat = bel_gradient([](const Point&) { return 2.5; }, 3, x, t, s, nu, M, 1);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(flat.mean[a]) <= 4.0 * flat.std_error[a]);

    const auto linear = bel_gradient([](const Point& y) { return y[0]; }, 3, x, t, s, nu, M, 2);
    CHECK(std::abs(linear.mean[0] - 1.0) <= 4.0 * linear.std_error[0]);
    CHECK(std::abs(linear.mean[1]) <= 4.0 * linear.std_error[1]);

    const auto wave = bel_gradient([](const Point& y) { return std::cos(y[0]); }, 3, x, t, s, nu, M, 3);
    CHECK(std::abs(wave.mean[0] + std::exp(-nu * (s - t)) * std::sin(x[0])) <= 4.0 * wave.std_error[0]);

    // grid payoff against the spectral gradient of the heat semigroup
    const auto spec = GridSpec::make(3, 32, kTwoPi);
    const auto f = random_band_limited(spec, 12, 3, false).component_field(0);
    const auto smooth = heat_semigroup(f, nu, s - t);
    const auto grad = gradient(smooth);
    const Point node = spec.node(5000);
    const auto est = bel_gradient(f, node, t, s, nu, M, 4, InterpolationMode::trigonometric);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(est.mean[a] - grad.component(a)[5000]) <= 4.0 * est.std_error[a]);

    CHECK_THROWS_AS(bel_gradient(f, x, 0.5, 0.5, nu, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(bel_gradient(f, x, 0.0, 0.5, 0.0, 10, 0), std::invalid_argument);
}

TEST_CASE("PTH1 header") {
    const auto spec = GridSpec::make(2, 8, kTwoPi);
    const auto e = simulate(steady(VectorField(spec), 1.0, 1), FlowScheme::brownian, 0.1, some_points(spec, 3),
                            TimeGrid::make(0.0, 1.0, 4), 5, 77);
    std::ostringstream os;
    write_pth1(os, e);
    const std::string b = os.str();
    CHECK(b.substr(0, 4) == "PTH1");
    CHECK(b.size() == 4 + 4 * 3 + 8 + 4 * 2 + e.positions.size() * 8);
    CHECK(static_cast<unsigned char>(b[8]) == 5);
    CHECK(static_cast<unsigned char>(b[16]) == 77);
    CHECK(parse_flow_scheme(to_string(FlowScheme::deterministic)) == FlowScheme::deterministic);
}
