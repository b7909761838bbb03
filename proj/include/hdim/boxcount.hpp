#pragma once

// Backward-orbit samples of the repeller and box-counting estimates in the
// (log|z|, arg z) chart.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hdim/geometry.hpp"
#include "hdim/maps.hpp"

namespace hdim {

struct PointCloud {
    std::vector<Complex> points;
    std::size_t depth = 0;
    bool capped = false;  // some level was subsampled to the cap
};

inline constexpr std::size_t kDefaultCloudCap = 2'000'000;

// f_1^{-1} o ... o f_depth^{-1}(base), expanded breadth first starting with
// f_depth^{-1}. A level above `cap` keeps every k-th point of the
// parent-major list, which keeps the same share of every branch.
PointCloud backward_orbit(std::span<const MapDescriptor> maps, Complex base, std::size_t depth,
                          std::size_t cap = kDefaultCloudCap);
// Union of the trees of several base points (needed when the repeller is
// not reached from a single one).
PointCloud backward_orbit(std::span<const MapDescriptor> maps, std::span<const Complex> bases,
                          std::size_t depth, std::size_t cap = kDefaultCloudCap);

// Smallest depth with 2 diam_K / beta^depth <= r_min.
std::size_t orbit_depth(const DomainConstants& constants, double r_min);

// Chart distance with the angle taken modulo 2 pi.
double chart_distance(ChartPoint a, ChartPoint b);

// Nearest-neighbour chart distance of up to `max_queries` evenly strided
// points of the cloud (against the whole cloud); returns the median.
double median_nn_spacing(std::span<const ChartPoint> points, std::size_t max_queries = 20000);

std::vector<ChartPoint> chart_points(const PointCloud& cloud);

// Diameter of the cloud in the chart metric, with the angular spread capped
// at pi because the angle is periodic.
double chart_diameter(std::span<const ChartPoint> points);

// `count` log-spaced radii from `top` down over `decades`, each snapped to
// 2 pi/m so the angular columns tile the circle.
std::vector<double> log_radii(double top, std::size_t count = 12, double decades = 2.0);
// log_radii with top = diameter/8.
std::vector<double> default_radii(double diameter, std::size_t count = 12, double decades = 2.0);

struct BoxCount {
    std::vector<double> radii;             // descending
    std::vector<double> counts;            // mean occupied boxes over the offsets
    std::vector<std::vector<double>> per_offset;
    double slope = 0.0;                    // least squares of log N on log(1/r)
    double max_pair_slope = 0.0;           // upper box surrogate
    double min_pair_slope = 0.0;           // lower box surrogate
    std::vector<double> running_slope;     // two-point slope ending at each radius (0 first)
};

inline constexpr std::size_t kBoxOffsets = 4;

// Throws ResolutionError when the median nearest-neighbour spacing exceeds
// the smallest radius, and DomainError on fewer than 2 radii.
BoxCount box_dimension(const PointCloud& cloud, std::vector<double> radii = {});

// Occupied boxes of side r for a grid shifted by (du, dtheta).
std::size_t occupied_boxes(std::span<const ChartPoint> points, double r, double du, double dtheta);

// CSV rows: r, N_r, running_slope.
void write_box_csv(std::ostream& out, const BoxCount& result);

}  // namespace hdim
