#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hdim/errors.hpp"
#include "hdim/maps.hpp"

using namespace hdim;

namespace {

const Domain kThin{HyperbolicAnnulus(0.25), HyperbolicAnnulus(0.85)};

Complex random_in_K(std::mt19937_64& rng, const HyperbolicAnnulus& K, double shrink = 0.95) {
    std::uniform_real_distribution<double> u(-shrink * K.half_width(), shrink * K.half_width());
    std::uniform_real_distribution<double> t(-kPi, kPi);
    return from_chart({u(rng), t(rng)});
}

// |F'(x)| by a fourth-order central difference along the real direction.
template <typename F>
double abs_derivative(F f, Complex x) {
    const double h = 1e-3;
    const Complex d = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
    return std::abs(d);
}

// Largest pair distance of the best bijection between equal-size sets.
double bottleneck_matching(const HyperbolicAnnulus& U, const std::vector<Complex>& a, const std::vector<Complex>& b) {
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, hyperbolic_distance(U, a[i], b[perm[i]]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_SUITE("maps") {

TEST_CASE("evaluation") {
    const Domain ex = Domain::from_k(0.99);
    CHECK(std::abs(evaluate(MapDescriptor::circle_power(2, kThin), Complex(0, 1)) - Complex(-1, 0)) < 1e-15);
    CHECK(std::abs(evaluate(MapDescriptor::power_plus_c(0, 0.1, ex), 1.0) - Complex(1.1, 0)) < 1e-15);
    const Complex c(0.02, -0.01);
    const Complex z = std::polar(1.0, kPi / 3.0);
    CHECK(std::abs(evaluate(MapDescriptor::power_plus_c(1, c, ex), z) - (-1.0 + c)) < 1e-14);
    CHECK_THROWS_AS(evaluate(MapDescriptor::circle_power(2, kThin), 0.5), DomainError);
}

TEST_CASE("degrees and descriptors") {
    CHECK(MapDescriptor::power_plus_c(3, 0.0, kThin).degree() == 5);
    CHECK(MapDescriptor::circle_power(4, kThin).degree() == 4);
    CHECK(MapDescriptor::uniform_cantor(3, 0.2, kThin).degree() == 3);
    CHECK(MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kThin).synthetic());
    CHECK_FALSE(MapDescriptor::circle_power(2, kThin).synthetic());
    CHECK_THROWS_AS(MapDescriptor::circle_power(1, kThin), DomainError);
    CHECK_THROWS_AS(MapDescriptor::power_plus_c(-1, 0.0, kThin), DomainError);
    CHECK_THROWS_AS(MapDescriptor::linear_ifs({{1.5, 0.0, 0.0, 1.0}}, kThin), DomainError);
    CHECK_THROWS_AS(Domain(HyperbolicAnnulus(0.8), HyperbolicAnnulus(0.5)), GeometryError);
}

TEST_CASE("conformal derivative") {
    CHECK(conformal_derivative(MapDescriptor::circle_power(2, kThin), 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    const MapDescriptor cantor = MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kThin);
    for (const Complex& x : preimages(cantor, 1.0).points) CHECK(conformal_derivative(cantor, x) == doctest::Approx(3.0));
    for (double t : {0.05, 0.2, 0.7, 0.95}) {
        const Complex z = from_chart({ifs_log_modulus(kThin.K, t), 0.3});
        const auto b = [&](double tt) { return tt <= 1.0 / 3.0 || tt >= 2.0 / 3.0; };
        if (b(t)) CHECK(conformal_derivative(cantor, z) == 3.0);
    }
}

TEST_CASE("derivative matches the hyperbolic divided difference") {
    std::mt19937_64 rng(2);
    const MapDescriptor f = MapDescriptor::power_plus_c(0, Complex(0.03, 0.02), kThin);
    const HyperbolicAnnulus& U = kThin.U;
    for (int i = 0; i < 20; ++i) {
        const Complex y = random_in_K(rng, kThin.K, 0.8);
        const Complex x = preimages(f, y).points.front();
        const double h = 1e-5;
        const Complex u = x * std::polar(1.0, h);
        const double divided = hyperbolic_distance(U, evaluate(f, u), evaluate(f, x)) / hyperbolic_distance(U, u, x);
        CHECK(std::abs(divided - conformal_derivative(f, x)) <= 50.0 * h);
    }
}

TEST_CASE("chain rule for the conformal derivative") {
    std::mt19937_64 rng(4);
    const Domain ex = Domain::from_k(0.99);
    const Complex c(0.1, 0.05);
    const MapDescriptor f = MapDescriptor::power_plus_c(0, c, ex);
    const HyperbolicAnnulus& U = ex.U;
    const auto ff = [&](Complex z) { return std::pow(std::pow(z, 2) + c, 2) + c; };
    int checked = 0;
    for (int i = 0; i < 200 && checked < 20; ++i) {
        const Complex y = random_in_K(rng, ex.K, 0.9);
        const PreimageSet one = preimages_or_empty(f, y);
        for (const Complex& x1 : one.points) {
            const PreimageSet two = preimages_or_empty(f, x1);
            for (const Complex& x : two.points) {
                // Df2 from the derivative of the composite and the density.
                const double df2 = abs_derivative(ff, x) * hyperbolic_density(U, y) / hyperbolic_density(U, x);
                CHECK(conformal_derivative(f, evaluate(f, x)) * conformal_derivative(f, x) ==
                      doctest::Approx(df2).epsilon(1e-9));
                ++checked;
            }
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("preimage examples") {
    const PreimageSet sq = preimages(MapDescriptor::circle_power(2, kThin), 1.0);
    REQUIRE(sq.points.size() == 2);
    CHECK(std::abs(sq.points[0] - 1.0) < 1e-15);
    CHECK(std::abs(sq.points[1] + 1.0) < 1e-15);
    const DerivativeRange r = derivative_range(MapDescriptor::circle_power(2, kThin), {33, 32});
    for (double df : sq.derivatives) CHECK(df >= r.inf);
    const PreimageSet cube = preimages(MapDescriptor::power_plus_c(1, 0.0, kThin), 1.0);
    REQUIRE(cube.points.size() == 3);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(cube.points[j] - std::polar(1.0, kTwoPi * j / 3.0)) < 1e-14);
    CHECK_THROWS_AS(preimages(MapDescriptor::power_plus_c(0, 1.0, kThin), 1.0), RootError);
    CHECK_THROWS_AS(preimages(MapDescriptor::circle_power(2, kThin), 0.5), DomainError);
    // |y - c| = 1.47: both square roots fall outside K's band.
    CHECK_THROWS_AS(preimages(MapDescriptor::power_plus_c(0, -0.3, kThin), 1.17), EmptyPreimage);
}

TEST_CASE("preimage residuals and completeness against Newton") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const Domain ex = Domain::from_k(0.99);
    for (int N = 0; N <= 3; ++N) {
        const Complex c(0.04 * unit(rng), 0.04 * unit(rng));
        const MapDescriptor f = MapDescriptor::power_plus_c(N, c, ex);
        for (int trial = 0; trial < 10; ++trial) {
            const Complex y = random_in_K(rng, ex.K);
            const PreimageSet set = preimages_or_empty(f, y);
            for (const Complex& x : set.points) CHECK(std::abs(evaluate(f, x) - y) <= 1e-10);
            for (std::size_t i = 0; i < set.points.size(); ++i) {
                for (std::size_t j = i + 1; j < set.points.size(); ++j) CHECK(std::abs(set.points[i] - set.points[j]) > 1e-6);
            }
            const int d = N + 2;
            for (int seed = 0; seed < 64; ++seed) {
                Complex z = random_in_K(rng, ex.K, 1.0);
                for (int it = 0; it < 100; ++it) z -= (std::pow(z, d) + c - y) / (static_cast<double>(d) * std::pow(z, d - 1));
                if (std::abs(std::pow(z, d) + c - y) > 1e-12 || !ex.K.contains_closed(z)) continue;
                const bool listed = std::any_of(set.points.begin(), set.points.end(),
                                                [&](const Complex& x) { return std::abs(x - z) < 1e-8; });
                CHECK(listed);
            }
        }
    }
}

TEST_CASE("inverse branches pair up and contract") {
    std::mt19937_64 rng(6);
    const DomainConstants k = domain_constants(kThin.U, kThin.K);
    for (int N = 0; N <= 1; ++N) {
        const MapDescriptor f = MapDescriptor::power_plus_c(N, Complex(0.02, 0.0), kThin);
        const double expansion = derivative_range(f, {64, 64}).inf;
        for (int trial = 0; trial < 10; ++trial) {
            const Complex y = random_in_K(rng, kThin.K, 0.5);
            const Complex w = y * std::polar(1.0, 0.05);
            const double d = hyperbolic_distance(kThin.U, y, w);
            REQUIRE(d <= k.delta_big);
            const PreimageSet py = preimages(f, y);
            const PreimageSet pw = preimages(f, w);
            REQUIRE(py.points.size() == pw.points.size());
            CHECK(bottleneck_matching(kThin.U, py.points, pw.points) <= d / expansion * 1.01);
        }
    }
}

TEST_CASE("branch radius") {
    DomainConstants k = DomainConstants::from_ell(4.0 * std::atanh(0.9));
    CHECK(k.alpha == doctest::Approx(0.9).epsilon(1e-14));
    const double expected = std::log(5.3 / 4.7);
    CHECK(branch_radius(3.0, k) == doctest::Approx(std::min(expected, k.delta_big)).epsilon(1e-12));
    k.delta_big = 1.0;
    CHECK(branch_radius(3.0, k) == doctest::Approx(0.1201443).epsilon(1e-6));
    double prev = branch_radius(1.0, k);
    for (double df : {2.0, 5.0, 20.0, 1e3, 1e6}) {
        const double r = branch_radius(df, k);
        CHECK(r <= prev);
        prev = r;
    }
    CHECK(prev < 1e-6);
    // alpha/Df close to 5 drives the log past delta_big.
    CHECK(branch_radius(0.9 / 4.99, k) == k.delta_big);
}

TEST_CASE("condition number") {
    CHECK(condition_number(MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kThin), {16, 1}) == 1.0);
    // z^2: Df(x) = 2 cos(pi u_x / W) / cos(2 pi u_x / W), extremes at u_x = 0 and |u_x| = a_K / 2.
    const Domain ex = Domain::from_k(0.99);
    const double W = ex.U.strip_width();
    const double a = ex.K.half_width();
    const double oracle = std::cos(kPi * a / (2.0 * W)) / std::cos(kPi * a / W);
    CHECK(condition_number(MapDescriptor::circle_power(2, ex), {257, 8}) == doctest::Approx(oracle).epsilon(1e-9));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> N(0, 3);
    for (int i = 0; i < 1000; ++i) {
        const MapDescriptor f = MapDescriptor::power_plus_c(N(rng), Complex(0.1 * unit(rng), 0.1 * unit(rng)), ex);
        CHECK(condition_number(f, {6, 6}) >= 1.0);
    }
}

TEST_CASE("degree area check") {
    CHECK(degree_area_check(MapDescriptor::circle_power(2, kThin), {32, 32}));
    CHECK(degree_area_check(MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kThin), {16, 1}));
    CHECK_FALSE(degree_area_check(10, 2.0));
    CHECK(degree_area_check(4, 2.0));
}

TEST_CASE("ifs embedding round trip") {
    for (double t : {0.0, 0.25, 1.0}) CHECK(ifs_coordinate(kThin.K, ifs_log_modulus(kThin.K, t)) == doctest::Approx(t));
}

}
