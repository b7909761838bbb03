#include <cmath>
#include <vector>

#include "doctest.h"
#include "hdim/errors.hpp"
#include "hdim/solver.hpp"

using namespace hdim;

namespace {

const Domain kThin{HyperbolicAnnulus(0.25), HyperbolicAnnulus(0.85)};
const Domain kWide = Domain::from_k(0.99);

SolverOptions options(GridShape grid, double tol = 1e-6) {
    SolverOptions o;
    o.grid = grid;
    o.tol = tol;
    return o;
}

std::vector<MapDescriptor> alternating(std::size_t length) {
    const MapDescriptor a = MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kWide);
    const MapDescriptor b = MapDescriptor::uniform_cantor(3, 0.25, kWide);
    std::vector<MapDescriptor> seq;
    for (std::size_t i = 0; i < length; ++i) seq.push_back(i % 2 == 0 ? a : b);
    return seq;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("bisection") {
    const RootBracket r = bisect_decreasing([](double s) { return 1.0 - s * s; }, 0.0, 3.0, 1e-10, 100);
    CHECK(r.hi - r.lo <= 1e-10);
    CHECK(r.mid() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.f_lo >= 0.0);
    CHECK(r.f_hi <= 0.0);
    CHECK_THROWS_AS(bisect_decreasing([](double s) { return s - 1.0; }, 0.0, 3.0, 1e-6, 60), NoSignChange);
    CHECK_THROWS_AS(bisect_decreasing([](double s) { return 2.0 - s; }, 0.0, 1.0, 1e-6, 60), NoSignChange);
    // Decreasing at the ends but not in between.
    const auto wiggle = [](double s) { return s < 1.4 || s > 1.6 ? 1.0 - s : 5.0; };
    CHECK_THROWS_AS(bisect_decreasing(wiggle, 0.0, 3.0, 1e-6, 60), MonotonicityError);
}

TEST_CASE("Cantor dimension") {
    const std::vector<MapDescriptor> maps{MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kWide)};
    const DimensionResult r = solve_dimension(maps, 4, options({256, 1}));
    CHECK(std::abs(r.s_crit - std::log(2.0) / std::log(3.0)) <= 1e-6);
    CHECK(r.s_lower <= r.s_crit);
    CHECK(r.s_crit <= r.s_upper);
    CHECK(r.n_used == 4);
    const std::vector<MapDescriptor> four{MapDescriptor::uniform_cantor(4, 0.25, kWide)};
    CHECK(std::abs(solve_dimension(four, 3, options({64, 1})).s_crit - 1.0) <= 1e-6);
}

TEST_CASE("z^2 has dimension one") {
    const std::vector<MapDescriptor> maps{MapDescriptor::circle_power(2, kThin)};
    const DimensionResult r = solve_dimension(maps, 8, options({128, 128}));
    CHECK(std::abs(r.s_crit - 1.0) <= 5e-3);
    CHECK(r.s_lower <= r.s_upper);
    CHECK(r.diagnostics.bracket_width_at_root >= 0.0);
    CHECK(r.diagnostics.bracket_width_at_root <= 0.01);
}

TEST_CASE("root does not depend on the search interval") {
    const std::vector<MapDescriptor> maps{MapDescriptor::power_plus_c(0, 0.1, kThin)};
    SolverOptions a = options({64, 64}, 1e-8);
    SolverOptions b = a;
    b.s_min = 0.5;
    b.s_max = 1.9;
    const DimensionResult ra = solve_dimension(maps, 6, a);
    const DimensionResult rb = solve_dimension(maps, 6, b);
    CHECK(std::abs(ra.s_crit - rb.s_crit) <= 2e-8);
    CHECK(ra.s_crit > 1.0);
    CHECK(ra.s_crit <= 2.0 + 1e-3);

    b.s_min = 1.5;
    CHECK_THROWS_AS(solve_dimension(maps, 6, b), NoSignChange);
}

TEST_CASE("pressure curve is decreasing") {
    const std::vector<MapDescriptor> maps{MapDescriptor::power_plus_c(0, Complex(0.05, 0.08), kThin)};
    const PlanSequence plans(maps, {64, 64});
    double prev_lower = INFINITY;
    double prev_upper = INFINITY;
    for (int i = 0; i < 10; ++i) {
        const PressureEstimate p = pressure_bracket(0.2 * i, plans, 6);
        CHECK(p.lower < prev_lower);
        CHECK(p.upper < prev_upper);
        prev_lower = p.lower;
        prev_upper = p.upper;
    }
}

TEST_CASE("conjugate parameters give the same dimension") {
    // z -> conj(z) conjugates z^d + c to z^d + conj(c) and preserves the annulus.
    const Complex c(0.06, 0.09);
    const SolverOptions o = options({64, 64}, 1e-8);
    for (int N : {0, 1}) {
        const std::vector<MapDescriptor> a{MapDescriptor::power_plus_c(N, c, kThin)};
        const std::vector<MapDescriptor> b{MapDescriptor::power_plus_c(N, std::conj(c), kThin)};
        CHECK(std::abs(solve_dimension(a, 6, o).s_crit - solve_dimension(b, 6, o).s_crit) <= 1e-6);
    }
    // z -> -z conjugates z^3 + c to z^3 - c.
    const std::vector<MapDescriptor> a{MapDescriptor::power_plus_c(1, c, kThin)};
    const std::vector<MapDescriptor> b{MapDescriptor::power_plus_c(1, -c, kThin)};
    CHECK(std::abs(solve_dimension(a, 6, o).s_crit - solve_dimension(b, 6, o).s_crit) <= 1e-6);
}

TEST_CASE("critical exponents of a stationary sequence") {
    const std::vector<MapDescriptor> one{MapDescriptor::uniform_cantor(2, 1.0 / 3.0, kWide)};
    const std::vector<MapDescriptor> seq(40, one.front());
    const CriticalExponents e = critical_exponents(seq, 40, options({64, 1}, 1e-9));
    const double exact = std::log(2.0) / std::log(3.0);
    CHECK(std::abs(e.lower - exact) <= 1e-8);
    CHECK(std::abs(e.upper - exact) <= 1e-8);
}

TEST_CASE("critical exponents of an alternating sequence") {
    const std::vector<MapDescriptor> seq = alternating(400);
    const CriticalExponents e = critical_exponents(seq, 400, options({64, 1}, 1e-9));
    const double exact = std::log(6.0) / std::log(12.0);
    CHECK(e.lower <= e.upper + 1e-9);
    CHECK(std::abs(e.lower - exact) <= 2e-3);
    CHECK(std::abs(e.upper - exact) <= 2e-3);
}

TEST_CASE("degree one sequences have exponent near zero") {
    const std::vector<MapDescriptor> seq(200, MapDescriptor::uniform_cantor(1, 0.5, kWide));
    const CriticalExponents e = critical_exponents(seq, 200, options({64, 1}));
    CHECK(e.lower <= 2e-3);
    CHECK(e.upper <= 2e-3);
}

TEST_CASE("degree and dilation bounds") {
    const std::vector<MapDescriptor> seq = alternating(10);
    const EnsembleStats st = ensemble_statistics(seq, {65, 1});
    CHECK(st.E_log_dmin == doctest::Approx(0.5 * std::log(6.0)));
    CHECK(st.E_log_dmax == doctest::Approx(0.5 * std::log(6.0)));
    CHECK(st.E_log_sup_Df == doctest::Approx(0.5 * std::log(12.0)));
    CHECK(st.E_log_sup_invDf == doctest::Approx(-0.5 * std::log(12.0)));
    const DimensionBounds b = dimension_bounds(st);
    CHECK(b.lower == doctest::Approx(std::log(6.0) / std::log(12.0)));
    CHECK(b.upper == doctest::Approx(std::log(6.0) / std::log(12.0)));
    CHECK(b.contains(std::log(6.0) / std::log(12.0), 1e-12));

    const std::vector<MapDescriptor> z2{MapDescriptor::power_plus_c(0, 0.1, kThin)};
    const DimensionBounds q = dimension_bounds(ensemble_statistics(z2, {33, 64}));
    const DimensionResult r = solve_dimension(z2, 6, options({64, 64}));
    CHECK(q.contains(r.s_crit));

    // n branches with Df = 6 and n drawn from {2, 3, 5}: both bounds are E log n / log 6.
    const std::vector<int> counts{2, 3, 5, 3, 2, 2, 5, 3};
    std::vector<MapDescriptor> six;
    double mean_log_n = 0.0;
    for (int n : counts) {
        six.push_back(MapDescriptor::uniform_cantor(n, 1.0 / 6.0, kWide));
        mean_log_n += std::log(n) / static_cast<double>(counts.size());
    }
    const DimensionBounds l2 = dimension_bounds(ensemble_statistics(six, {65, 1}));
    CHECK(l2.lower == doctest::Approx(mean_log_n / std::log(6.0)).epsilon(1e-12));
    CHECK(l2.upper == doctest::Approx(mean_log_n / std::log(6.0)).epsilon(1e-12));
    std::vector<MapDescriptor> long_seq;
    for (int rep = 0; rep < 40; ++rep) long_seq.insert(long_seq.end(), six.begin(), six.end());
    const CriticalExponents e = critical_exponents(long_seq, long_seq.size(), options({64, 1}, 1e-9));
    CHECK(std::abs(e.lower - mean_log_n / std::log(6.0)) <= 5e-3);
    CHECK(std::abs(e.upper - mean_log_n / std::log(6.0)) <= 5e-3);

    CHECK_THROWS_AS(dimension_bounds(EnsembleStats{0.0, 0.0, 0.0, -1.0}), DegenerateBound);
    CHECK_THROWS_AS(dimension_bounds(EnsembleStats{0.0, 0.0, 1.0, 0.0}), DegenerateBound);
}

}
