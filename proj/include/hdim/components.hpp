#pragma once

// delta-connected components of a repeller sample, the transition digraph
// between them, its strongly connected classes, and masked pressures per
// class for repellers that are not mixing.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hdim/boxcount.hpp"
#include "hdim/maps.hpp"
#include "hdim/transfer.hpp"

namespace hdim {

struct ComponentDecomposition {
    PointCloud cloud;
    std::vector<ChartPoint> chart;
    MapDescriptor map;
    double delta = 0.0;

    // Point indices per component, numbered by their lexicographically
    // smallest (log|z|, arg z) member.
    std::vector<std::vector<std::size_t>> components;
    std::vector<std::size_t> component_of;

    // transition[j][i]: f(Lambda_i) meets (hence covers) Lambda_j.
    std::vector<std::vector<bool>> transition;

    // Strongly connected classes of the digraph i -> j when transition[j][i],
    // numbered by their smallest component.
    std::vector<std::vector<std::size_t>> classes;
    std::vector<std::size_t> class_of;
    // Edges (a, b) between distinct classes of the condensation.
    std::vector<std::pair<std::size_t, std::size_t>> condensation_edges;
    // precedes[a][b]: a path leads from class a to class b (a != b).
    std::vector<std::vector<bool>> precedes;

    // Coverage failures found while checking the Markov-like property.
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultDeltaFactor = 5.0;

// Single-linkage clustering at chart distance delta (default: 5 x median
// nearest-neighbour spacing). Throws ScaleError if delta is below the cloud
// spacing.
ComponentDecomposition decompose(const PointCloud& cloud, const MapDescriptor& map,
                                 std::optional<double> delta = {});

// Grid nodes within delta of a point of the class. With a single angular
// node the grid cannot resolve the angle and only log-moduli are compared.
std::vector<double> class_mask(const ComponentDecomposition& decomp, std::size_t cls,
                               const GridFunction& grid);

// (1/n) log max of (chi_C L_s)^n chi_C for every class; -inf when the masked
// iterate dies out.
std::vector<double> class_pressure(const ComponentDecomposition& decomp, double s, std::size_t n,
                                   GridShape grid = {});

struct CriticalClass {
    std::size_t class_id = 0;
    double s_crit = 0.0;
    std::vector<std::optional<double>> class_roots;  // empty where P_C has no zero
    std::vector<std::size_t> invariant_points;        // indices into the cloud
};

// Largest class-wise zero, realised by an order-minimal class among the
// maximisers. Throws NoSignChange if no class has a zero on [s_min, s_max].
CriticalClass critical_class(const ComponentDecomposition& decomp, std::size_t n, double tol,
                             GridShape grid = {}, double s_min = 0.0, double s_max = 2.2);

// Cloud points of the class whose forward orbit (up to the cloud depth)
// stays within delta/2 of the class.
std::vector<std::size_t> invariant_subcloud(const ComponentDecomposition& decomp, std::size_t cls);

// Whether some forward image, within `steps` iterates, of the cloud points
// in the delta-ball around point a comes within delta of point b.
bool reaches(const ComponentDecomposition& decomp, std::size_t a, std::size_t b, std::size_t steps);

}  // namespace hdim
