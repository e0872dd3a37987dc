#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fbsde_ns/besov.hpp"
#include "fbsde_ns/harness.hpp"
#include "support.hpp"

using namespace fbsde;
using fbsde::test::kTwoPi;

namespace {

VectorField mode_e1(const GridSpec& spec, int m) {
    return test::vector_from(spec, [&](const Point& x) { return Point{std::cos(m * x[0]), 0, 0}; });
}

// [cos(m x1) e1]_{B^alpha_{2,2}} on the 2-torus of side 2 pi, shifts |y| <= pi, by adaptive quadrature
// of the closed-form shift difference ||v(.+y) - v||_2^2 = 4 sin^2(m y1 / 2) |T^2| / 2.
double seminorm_oracle_2d(int m, double alpha) {
    using boost::math::quadrature::gauss_kronrod;
    const double area = kTwoPi * kTwoPi;
    auto radial = [&](double theta) {
        auto f = [&](double rho) {
            const double s = std::sin(0.5 * m * rho * std::cos(theta));
            return 2.0 * s * s * area / std::pow(rho, 1.0 + 2.0 * alpha);
        };
        return gauss_kronrod<double, 61>::integrate(f, 0.0, M_PI, 12, 1e-12);
    };
    const double total = gauss_kronrod<double, 61>::integrate(radial, 0.0, kTwoPi, 10, 1e-11);
    return std::sqrt(total);
}

} // namespace

TEST_CASE("lp norms") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    VectorField zero(spec);
    CHECK(lp_norm(zero, 3.0) == 0.0);

    const auto c = test::vector_from(spec, [](const Point&) { return Point{3, 0, -4}; });
    for (double p : {1.5, 2.0, 4.0, 7.0}) CHECK(lp_norm(c, p) == doctest::Approx(5.0 * std::pow(kTwoPi, 3.0 / p)).epsilon(1e-13));

    const auto s = test::scalar_from(spec, [](const Point& x) { return std::sin(x[0]); });
    const double expect = std::sqrt(std::pow(kTwoPi, 3) / 2.0);
    CHECK(lp_norm(s, 2.0) == doctest::Approx(expect).epsilon(1e-13));
    // Parseval cross-check
    const auto S = dft_forward(s);
    double energy = 0.0;
    for (const auto& a : S.component(0)) energy += std::norm(a);
    CHECK(std::sqrt(energy * spec.volume()) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sobolev norms") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    VectorField zero(spec);
    CHECK(sobolev_norm(zero, 2, 2.0) == 0.0);

    const auto c = test::vector_from(spec, [](const Point&) { return Point{1, 1, 1}; });
    CHECK(sobolev_norm(c, 1, 3.0) == doctest::Approx(lp_norm(c, 3.0)).epsilon(1e-14));

    const auto v = test::vector_from(spec, [](const Point& x) { return Point{0, std::sin(x[0]), 0}; });
    CHECK(sobolev_norm(v, 1, 2.0) == doctest::Approx(2.0 * std::sqrt(std::pow(kTwoPi, 3) / 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(sobolev_norm(v, 3, 2.0), std::invalid_argument);

    // second derivative tensor of sin(2 x1) e2 has a single entry -4 sin(2 x1)
    const auto w = test::vector_from(spec, [](const Point& x) { return Point{0, std::sin(2 * x[0]), 0}; });
    const double base = std::sqrt(std::pow(kTwoPi, 3) / 2.0);
    CHECK(sobolev_norm(w, 2, 2.0) == doctest::Approx((1 + 2 + 4) * base).epsilon(1e-12));
}

TEST_CASE("besov index validation") {
    CHECK_THROWS_AS(BesovIndex::make(1.0, 2, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(BesovIndex::make(2, 0.5, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(BesovIndex::make(2, 2, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(BesovIndex::make(2, 2, -1, 0.5), std::invalid_argument);
    CHECK_NOTHROW(BesovIndex::make(2, kInf, 1, 0.5));
    const auto idx = BesovIndex::from_r(4, 4, 2.5);
    CHECK(idx.k == 2);
    CHECK(idx.alpha == doctest::Approx(0.5));

    const auto spec = GridSpec::make(2, 16, kTwoPi);
    SeminormQuadrature few;
    few.radial_nodes = 3;
    CHECK_THROWS_AS(few.resolved(spec), std::invalid_argument);
    SeminormQuadrature tiny;
    tiny.y_min = 0.1 * spec.spacing();
    CHECK_THROWS_AS(tiny.resolved(spec), std::invalid_argument);
}

TEST_CASE("seminorm basics") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto idx = BesovIndex::make(2, 2, 0, 0.5);
    VectorField zero(spec);
    CHECK(besov_seminorm(zero, idx) == 0.0);
    CHECK(besov_norm(zero, idx) == 0.0);

    const auto c = test::vector_from(spec, [](const Point&) { return Point{2, 0, 1}; });
    CHECK(besov_seminorm(c, idx) < 1e-12);
    CHECK(besov_norm(c, idx) == doctest::Approx(sobolev_norm(c, 0, 2.0)).epsilon(1e-12));

    const auto v = random_band_limited(spec, 7, 3, false);
    for (const auto& j : {idx, BesovIndex::make(4, 4, 1, 0.5), BesovIndex::make(3, kInf, 2, 0.25)}) {
        const double s1 = besov_seminorm(v, j);
        CHECK(besov_seminorm(2.0 * v, j) == doctest::Approx(2.0 * s1).epsilon(1e-12));
        CHECK(besov_norm(v, j) == doctest::Approx(sobolev_norm(v, j.k, j.p) + s1).epsilon(1e-12));
    }
}

TEST_CASE("seminorm against adaptive quadrature of the closed form") {
    const auto spec = GridSpec::make(2, 64, kTwoPi);
    for (int m : {1, 2}) {
        const auto v = mode_e1(spec, m);
        const double oracle = seminorm_oracle_2d(m, 0.5);
        const double value = besov_seminorm(v, BesovIndex::make(2, 2, 0, 0.5));
        CHECK(value == doctest::Approx(oracle).epsilon(0.02));
    }
}

TEST_CASE("seminorm quadrature refinement") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = mode_e1(spec, 1);
    const auto idx = BesovIndex::make(2, 2, 0, 0.5);
    const SeminormQuadrature base{};
    const double a = besov_seminorm(v, idx, base);
    const double b = besov_seminorm(v, idx, base.refined(4));
    CHECK(std::abs(a - b) <= 0.02 * b);
}

TEST_CASE("triangle inequality") {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto idx = BesovIndex::make(4, 4, 1, 0.5);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto a = random_band_limited(spec, 2 * s, 3, false);
        const auto b = random_band_limited(spec, 2 * s + 1, 3, false);
        CHECK(besov_norm(a + b, idx) <= besov_norm(a, idx) + besov_norm(b, idx) + 1e-10);
    }
}

TEST_CASE("embedding exponent") {
    CHECK(embedding_exponent(6, 0.5, 3) == doctest::Approx(0.75));
    CHECK(embedding_exponent(12, 0.5, 3) == doctest::Approx(1.0));
    CHECK(embedding_exponent(4, 0.25, 3) == doctest::Approx(0.5));
    CHECK_THROWS_AS(embedding_exponent(3, 0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(embedding_exponent(5, 1.0, 3), std::invalid_argument);
}

TEST_CASE("interpolation diagnostic") {
    const auto spec = GridSpec::make(2, 32, kTwoPi);
    const auto low = BesovIndex::make(4, 4, 1, 0.5);
    const auto mid = BesovIndex::make(4, 4, 2, 0.25);
    const auto high = BesovIndex::make(4, 4, 2, 0.5);
    VectorField zero(spec);
    CHECK(interpolation_diagnostic(zero, low, mid, high).ratio == 0.0);

    const auto v = mode_e1(spec, 2);
    const auto r1 = interpolation_diagnostic(v, low, mid, high);
    const auto r2 = interpolation_diagnostic(3.5 * v, low, mid, high);
    CHECK(r1.theta == doctest::Approx(0.25));
    CHECK(std::isfinite(r1.ratio));
    CHECK(std::abs(r1.ratio - r2.ratio) < 1e-10);
    CHECK_THROWS_AS(interpolation_diagnostic(v, high, mid, low), std::invalid_argument);
    CHECK_THROWS_AS(interpolation_diagnostic(v, BesovIndex::make(2, 4, 1, 0.5), mid, high), std::invalid_argument);
}

TEST_CASE("smoothness norm routes integers to sobolev") {
    const auto spec = GridSpec::make(2, 16, kTwoPi);
    const auto v = random_band_limited(spec, 3, 3, true);
    CHECK(smoothness_norm(v, 1.0, 4, 4) == sobolev_norm(v, 1, 4));
    CHECK(smoothness_norm(v, 1.5, 4, 4) == besov_norm(v, BesovIndex::make(4, 4, 1, 0.5)));
}

TEST_CASE("norm csv row") {
    std::ostringstream os;
    write_norm_csv_row(os, "u_0", BesovIndex::make(4, 2, 1, 0.5), 1.25, SeminormQuadrature{});
    CHECK(os.str().rfind("u_0,4,2,1.5,1.25,", 0) == 0);
}
