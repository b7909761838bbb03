#include <cmath>
#include <vector>

#include "doctest.h"
#include "hdim/components.hpp"
#include "hdim/errors.hpp"
#include "hdim/solver.hpp"

using namespace hdim;

namespace {

const Domain kWide = Domain::from_k(0.99);

// Two Cantor sets on separate radial bands: 2 branches of ratio 1/3 onto
// t in [0, 0.4] and 3 branches of ratio 1/4 onto t in [0.6, 1].
std::vector<IfsBranch> two_cantor_branches() {
    return {{1.0 / 3.0, 0.0, 0.0, 0.4},
            {1.0 / 3.0, 0.8 / 3.0, 0.0, 0.4},
            {0.25, 0.45, 0.6, 1.0},
            {0.25, 0.6, 0.6, 1.0},
            {0.25, 0.75, 0.6, 1.0}};
}

ComponentDecomposition decompose_ifs(const std::vector<IfsBranch>& branches, std::size_t depth) {
    const MapDescriptor f = MapDescriptor::linear_ifs(branches, kWide);
    const std::vector<MapDescriptor> maps{f};
    const std::vector<Complex> bases{from_chart({ifs_log_modulus(kWide.K, 0.2), 0.0}),
                                     from_chart({ifs_log_modulus(kWide.K, 0.8), 0.0})};
    const PointCloud cloud = backward_orbit(maps, bases, depth);
    // The band gap is 0.2 of the width of K in t.
    return decompose(cloud, f, 0.15 * 2.0 * kWide.K.half_width());
}

const ComponentDecomposition& two_cantor() {
    static const ComponentDecomposition d = decompose_ifs(two_cantor_branches(), 8);
    return d;
}

// Adds a branch from the 1/4 band into the 1/3 band: class 0 now reaches class 1.
const ComponentDecomposition& chain() {
    static const ComponentDecomposition d = [] {
        std::vector<IfsBranch> b = two_cantor_branches();
        b.push_back({0.1, 0.14, 0.6, 1.0});
        return decompose_ifs(b, 8);
    }();
    return d;
}

void check_structure(const ComponentDecomposition& d) {
    // Partition of the cloud.
    std::size_t total = 0;
    std::size_t mislabeled = 0;
    for (std::size_t c = 0; c < d.components.size(); ++c) {
        total += d.components[c].size();
        for (std::size_t p : d.components[c]) mislabeled += d.component_of[p] != c;
    }
    CHECK(total == d.chart.size());
    CHECK(mislabeled == 0);
    // Pairwise delta-separated (strided sample against every point).
    const std::size_t stride = std::max<std::size_t>(1, d.chart.size() / 300);
    std::size_t close = 0;
    for (std::size_t p = 0; p < d.chart.size(); p += stride) {
        for (std::size_t q = 0; q < d.chart.size(); ++q) {
            close += d.component_of[p] != d.component_of[q] && chart_distance(d.chart[p], d.chart[q]) <= d.delta;
        }
    }
    CHECK(close == 0);
    // Classes are mutually reachable sets; precedes is a strict order.
    const std::size_t k = d.classes.size();
    for (std::size_t a = 0; a < k; ++a) {
        CHECK_FALSE(d.precedes[a][a]);
        for (std::size_t b = 0; b < k; ++b) {
            if (d.precedes[a][b]) CHECK_FALSE(d.precedes[b][a]);
            for (std::size_t c = 0; c < k; ++c) {
                if (d.precedes[a][b] && d.precedes[b][c]) CHECK(d.precedes[a][c]);
            }
        }
    }
    for (auto [a, b] : d.condensation_edges) {
        CHECK(a != b);
        CHECK(d.precedes[a][b]);
    }
}

}  // namespace

TEST_SUITE("components") {

TEST_CASE("z^2 Julia set is one component") {
    const Domain thin{HyperbolicAnnulus(0.25), HyperbolicAnnulus(0.85)};
    const MapDescriptor f = MapDescriptor::circle_power(2, thin);
    const std::vector<MapDescriptor> maps{f};
    const ComponentDecomposition d = decompose(backward_orbit(maps, Complex(1.0, 0.0), 12), f);
    CHECK(d.components.size() == 1);
    CHECK(d.classes.size() == 1);
    CHECK(d.warnings.empty());
    REQUIRE(d.transition.size() == 1);
    CHECK(d.transition[0][0]);
    check_structure(d);

    // Single class: the class pressure is the global one.
    for (double s : {0.5, 1.0, 1.5}) {
        const double cls = class_pressure(d, s, 8, {64, 64})[0];
        const PressureEstimate p = pressure_bracket(s, maps, 8, {64, 64});
        CHECK(std::abs(cls - p.upper) <= 1e-6);
    }
    const CriticalClass cc = critical_class(d, 8, 1e-8, {64, 64});
    CHECK(cc.class_id == 0);
    SolverOptions o;
    o.grid = {64, 64};
    o.tol = 1e-8;
    CHECK(std::abs(cc.s_crit - solve_dimension(maps, 8, o).s_upper) <= 1e-6);
    CHECK(cc.invariant_points.size() == d.chart.size());
}

TEST_CASE("delta below the cloud spacing") {
    const Domain thin{HyperbolicAnnulus(0.25), HyperbolicAnnulus(0.85)};
    const MapDescriptor f = MapDescriptor::circle_power(2, thin);
    const std::vector<MapDescriptor> maps{f};
    const PointCloud cloud = backward_orbit(maps, Complex(1.0, 0.0), 8);
    CHECK_THROWS_AS(decompose(cloud, f, 1e-4), ScaleError);
}

TEST_CASE("two Cantor sets") {
    const ComponentDecomposition& d = two_cantor();
    CHECK(d.components.size() == 2);
    CHECK(d.classes.size() == 2);
    CHECK(d.condensation_edges.empty());
    CHECK(d.warnings.empty());
    check_structure(d);
    // Class 0 holds the lexicographically smallest point: the 1/3 band is inner.
    const GridShape grid{256, 1};
    for (double s : {0.3, 0.7, 1.0}) {
        const std::vector<double> p = class_pressure(d, s, 10, grid);
        CHECK(std::abs(p[0] - (std::log(2.0) - s * std::log(3.0))) <= 1e-6);
        CHECK(std::abs(p[1] - (std::log(3.0) - s * std::log(4.0))) <= 1e-6);
        // Block structure: the unmasked operator has the larger of the two.
        const std::vector<MapDescriptor> maps{d.map};
        const PressureEstimate full = pressure_bracket(s, maps, 10, grid, TransferOptions{true});
        CHECK(std::abs(full.upper - std::max(p[0], p[1])) <= 1e-6);
    }
    const CriticalClass cc = critical_class(d, 10, 1e-8, grid);
    CHECK(cc.class_id == 1);
    CHECK(std::abs(cc.s_crit - std::log(3.0) / std::log(4.0)) <= 1e-6);
    REQUIRE(cc.class_roots.size() == 2);
    REQUIRE(cc.class_roots[0].has_value());
    CHECK(std::abs(*cc.class_roots[0] - std::log(2.0) / std::log(3.0)) <= 1e-6);
    // The 1/4 band is invariant: every point of its class stays.
    CHECK(cc.invariant_points.size() == d.components[d.classes[1][0]].size());
    const CriticalClass again = critical_class(d, 10, 1e-8, grid);
    CHECK(again.class_id == cc.class_id);
    CHECK(again.s_crit == cc.s_crit);
}

TEST_CASE("chain fixture orders the classes") {
    const ComponentDecomposition& d = chain();
    REQUIRE(d.classes.size() == 2);
    check_structure(d);
    REQUIRE(d.condensation_edges.size() == 1);
    CHECK(d.condensation_edges[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(d.precedes[0][1]);
    CHECK_FALSE(d.precedes[1][0]);
    const CriticalClass cc = critical_class(d, 10, 1e-8, {256, 1});
    CHECK(cc.class_id == 1);
    CHECK(std::abs(cc.s_crit - std::log(3.0) / std::log(4.0)) <= 1e-6);
}

TEST_CASE("transitivity inside a class") {
    const ComponentDecomposition& d = two_cantor();
    const DomainConstants k = domain_constants(kWide.U, kWide.K);
    const std::size_t n0 = std::max<std::size_t>(mixing_depth(k, 3.0), 1);
    for (const std::vector<std::size_t>& cls : d.classes) {
        const std::vector<std::size_t>& members = d.components[cls[0]];
        for (std::size_t t = 0; t < 5; ++t) {
            const std::size_t a = members[(t * 7919) % members.size()];
            const std::size_t b = members[(t * 104729 + 13) % members.size()];
            CHECK(reaches(d, a, b, n0 + 2));
        }
    }
    // No forward image of the outer band enters the inner one.
    const std::size_t inner = d.components[0].front();
    const std::size_t outer = d.components[1].front();
    CHECK_FALSE(reaches(d, outer, inner, 6));
}

TEST_CASE("class masks") {
    const ComponentDecomposition& d = two_cantor();
    const GridFunction g(kWide.K, {64, 1});
    const std::vector<double> m0 = class_mask(d, 0, g);
    const std::vector<double> m1 = class_mask(d, 1, g);
    REQUIRE(m0.size() == g.size());
    for (std::size_t i = 0; i < m0.size(); ++i) {
        // Each mask reaches delta (0.15 in t) beyond its band.
        const double t = ifs_coordinate(kWide.K, g.u_at(i));
        if (t < 0.35) CHECK(m0[i] == 1.0);
        if (t > 0.56) CHECK(m0[i] == 0.0);
        if (t > 0.65) CHECK(m1[i] == 1.0);
        if (t < 0.44) CHECK(m1[i] == 0.0);
    }
}

}
