#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "fbsde_ns/field_io.hpp"
#include "fbsde_ns/grid.hpp"
#include "fbsde_ns/spectral_ops.hpp"
#include "support.hpp"

using namespace fbsde;
using fbsde::test::kTwoPi;

namespace {

// c_k = (1/N) sum_x f(x) exp(-i k.x), summed directly
Complex direct_dft(const ScalarField& f, std::size_t mode) {
    const auto& spec = f.spec();
    const auto m = spec.unflatten(mode);
    Complex acc = 0.0;
    for (std::size_t i = 0; i < spec.points(); ++i) {
        const Point x = spec.node(i);
        double phase = 0.0;
        for (int a = 0; a < spec.dim(); ++a) phase += spec.wavenumber(m[a]) * x[a];
        acc += f[i] * std::exp(Complex(0.0, -phase));
    }
    return acc / static_cast<double>(spec.points());
}

} // namespace

TEST_CASE("grid spec validation and index maps") {
    CHECK_THROWS_AS(GridSpec::make(4, 16, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::make(3, 12, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::make(3, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::make(2, 16, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(1.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(0.0, 1.0, 0), std::invalid_argument);

    const auto spec = GridSpec::make(3, 8, kTwoPi);
    CHECK(spec.points() == 512);
    CHECK(spec.signed_mode(3) == 3);
    CHECK(spec.signed_mode(4) == -4);
    CHECK(spec.signed_mode(7) == -1);
    CHECK(spec.is_nyquist(4));
    for (std::size_t i : {0ul, 1ul, 77ul, 511ul}) CHECK(spec.flatten(spec.unflatten(i)) == i);
    // axis 0 slowest
    CHECK(spec.node(1)[2] == doctest::Approx(spec.spacing()));
    CHECK(spec.node(64)[0] == doctest::Approx(spec.spacing()));
    const Point w = spec.wrap({-0.5, kTwoPi + 0.25, 3.0});
    CHECK(w[0] == doctest::Approx(kTwoPi - 0.5));
    CHECK(w[1] == doctest::Approx(0.25));
}

TEST_CASE("single cosine mode against direct summation") {
    const auto spec = GridSpec::make(2, 8, kTwoPi);
    const auto f = test::scalar_from(spec, [](const Point& x) { return std::cos(x[0]); });
    const auto F = dft_forward(f);
    for (std::size_t k = 0; k < spec.points(); ++k) {
        const Complex ref = direct_dft(f, k);
        CHECK(std::abs(F.component(0)[k] - ref) < 1e-14);
    }
    const std::size_t plus = spec.flatten({1, 0, 0});
    const std::size_t minus = spec.flatten({7, 0, 0});
    CHECK(std::abs(F.component(0)[plus] - 0.5) < 1e-15);
    CHECK(std::abs(F.component(0)[minus] - 0.5) < 1e-15);
    int nonzero = 0;
    for (const auto& c : F.component(0)) nonzero += std::abs(c) > 1e-14;
    CHECK(nonzero == 2);
}

TEST_CASE("random field transform matches direct summation in 3D") {
    const auto spec = GridSpec::make(3, 8, 2.0);
    const auto f = test::noise_field(spec, 5).component_field(1);
    const auto F = dft_forward(f);
    double err = 0.0;
    for (std::size_t k = 0; k < spec.points(); k += 7) err = std::max(err, std::abs(F.component(0)[k] - direct_dft(f, k)));
    CHECK(err < 1e-13);
}

TEST_CASE("zero field and round trip") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    VectorField zero(spec);
    const auto Z = dft_forward(zero);
    for (const auto& c : Z.coeffs()) CHECK(c == Complex(0.0));
    CHECK(test::max_abs_of(dft_inverse_vector(Z).data()) == 0.0);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto v = test::noise_field(spec, seed);
        const auto back = dft_inverse_vector(dft_forward(v));
        CHECK(test::max_diff(back.data(), v.data()) <= 1e-12 * test::max_abs_of(v.data()));
    }
}

TEST_CASE("non-finite samples are rejected with their index") {
    const auto spec = GridSpec::make(2, 8, 1.0);
    VectorField v(spec);
    v.component(1)[5] = std::numeric_limits<double>::quiet_NaN();
    try {
        dft_forward(v);
        FAIL("expected rejection");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("69") != std::string::npos);
    }
}

TEST_CASE("spectral derivatives of single modes") {
    const double L = 3.0;
    const double k = kTwoPi / L;
    const auto spec = GridSpec::make(3, 16, L);
    const auto s1 = test::scalar_from(spec, [&](const Point& x) { return std::sin(k * x[0]); });
    const auto c1 = test::scalar_from(spec, [&](const Point& x) { return k * std::cos(k * x[0]); });
    CHECK(test::max_diff(derivative(s1, 0, 1).data(), c1.data()) < 1e-10);

    const auto c2 = test::scalar_from(spec, [&](const Point& x) { return std::cos(k * x[1]); });
    const auto d2 = test::scalar_from(spec, [&](const Point& x) { return -k * k * std::cos(k * x[1]); });
    CHECK(test::max_diff(derivative(c2, 1, 2).data(), d2.data()) < 1e-10);

    const auto constant = test::scalar_from(spec, [](const Point&) { return 4.2; });
    CHECK(test::max_abs_of(derivative(constant, 2, 1).data()) < 1e-14);

    CHECK_THROWS_AS(derivative(s1, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(derivative(s1, 0, 3), std::invalid_argument);
}

TEST_CASE("odd derivatives drop the Nyquist mode") {
    const auto spec = GridSpec::make(2, 8, kTwoPi);
    // cos(4 x) is the Nyquist mode on n = 8
    const auto f = test::scalar_from(spec, [](const Point& x) { return std::cos(4.0 * x[0]); });
    CHECK(test::max_abs_of(derivative(f, 0, 1).data()) < 1e-14);
    const auto second = derivative(f, 0, 2);
    CHECK(second[0] == doctest::Approx(-16.0));
}

TEST_CASE("divergence examples") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto shear = test::vector_from(spec, [](const Point& x) { return Point{std::sin(x[1]), 0, 0}; });
    CHECK(test::max_abs_of(divergence(shear).data()) < 1e-13);

    const auto compress = test::vector_from(spec, [](const Point& x) { return Point{std::sin(x[0]), 0, 0}; });
    const auto expect = test::scalar_from(spec, [](const Point& x) { return std::cos(x[0]); });
    CHECK(test::max_diff(divergence(compress).data(), expect.data()) < 1e-12);

    const auto psi = test::vector_from(spec, [](const Point& x) {
        return Point{std::sin(x[1] + 2 * x[2]), std::cos(x[0]) * std::sin(3 * x[2]), std::sin(x[0] - x[1])};
    });
    CHECK(test::max_abs_of(divergence(curl(psi)).data()) < 1e-10);

    VectorField constant(spec);
    for (int c = 0; c < 3; ++c)
        for (double& x : constant.component(c)) x = 1.5 + c;
    CHECK(test::max_abs_of(divergence(constant).data()) == 0.0);
}

TEST_CASE("interpolation") {
    const double L = kTwoPi;
    const auto spec = GridSpec::make(2, 32, L);
    const auto f = test::scalar_from(spec, [](const Point& x) { return std::cos(x[0]); });

    VectorField c(spec);
    for (double& x : c.component(0)) x = -0.25;
    for (double& x : c.component(1)) x = 2.0;
    const Point cv = interpolate(c, {1.234, 5.678, 0});
    CHECK(cv[0] == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(cv[1] == doctest::Approx(2.0).epsilon(1e-14));

    for (std::size_t i : {0ul, 17ul, 333ul, 1023ul}) {
        const Point x = spec.node(i);
        CHECK(interpolate(f, x, InterpolationMode::multilinear) == f[i]);
        CHECK(std::abs(interpolate(f, x, InterpolationMode::trigonometric) - f[i]) < 1e-14);
    }

    CHECK_THROWS_AS(interpolate(f, {std::nan(""), 0, 0}), std::invalid_argument);

    // midpoints between nodes: trig exact; multilinear second order
    auto midpoint_error = [&](int n, InterpolationMode mode) {
        const auto g = GridSpec::make(2, n, L);
        const auto h = test::scalar_from(g, [](const Point& x) { return std::cos(x[0]); });
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x0 = (i + 0.5) * g.spacing();
            worst = std::max(worst, std::abs(interpolate(h, {x0, 0.3, 0}, mode) - std::cos(x0)));
        }
        return worst;
    };
    CHECK(midpoint_error(32, InterpolationMode::trigonometric) < 1e-12);
    const double e32 = midpoint_error(32, InterpolationMode::multilinear);
    const double e64 = midpoint_error(64, InterpolationMode::multilinear);
    CHECK(e32 <= std::pow(L / 32, 2) / 8 * 1.01);
    CHECK(e32 / e64 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("spectral resampling preserves band-limited fields") {
    const auto coarse = GridSpec::make(3, 8, kTwoPi);
    auto field = [](const Point& x) { return Point{std::sin(x[1]) * std::cos(2 * x[2]), std::cos(x[0] + x[2]), 0.5}; };
    const auto v = test::vector_from(coarse, field);
    const auto fine = spectral_resample(v, 16);
    CHECK(fine.spec().n() == 16);
    const auto expect = test::vector_from(fine.spec(), field);
    CHECK(test::max_diff(fine.data(), expect.data()) < 1e-13);
    const auto back = spectral_resample(fine, 8);
    CHECK(test::max_diff(back.data(), v.data()) < 1e-13);
}

TEST_CASE("hermitian symmetry of transforms") {
    const auto spec = GridSpec::make(3, 16, kTwoPi);
    const auto v = test::noise_field(spec, 9);
    CHECK(dft_forward(v).hermitian_defect() < 1e-12);
}

TEST_CASE("NSF1 and CSV output") {
    const auto spec = GridSpec::make(2, 8, 1.5);
    auto v = test::noise_field(spec, 3);
    v.set_time_tag(0.125);
    std::stringstream ss;
    write_nsf1(ss, v);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "NSF1");
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 8 + 2 * 64 * 8);
    const auto back = read_nsf1(ss);
    CHECK(back.spec() == spec);
    CHECK(back.time_tag().value() == 0.125);
    CHECK(test::max_diff(back.data(), v.data()) == 0.0);

    VectorField untagged(spec);
    std::stringstream s2;
    write_nsf1(s2, untagged);
    CHECK_FALSE(read_nsf1(s2).time_tag().has_value());

    std::stringstream bad("NSF2xxxxxxxx");
    CHECK_THROWS(read_nsf1(bad));

    std::ostringstream csv;
    write_csv(csv, v);
    std::istringstream lines(csv.str());
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
    CHECK(rows == 64);
}
