#include "hdim/boxcount.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>

#include "chart_grid.hpp"
#include "hdim/errors.hpp"
#include "hdim/transfer.hpp"

namespace hdim {

namespace {

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

PointCloud backward_orbit(std::span<const MapDescriptor> maps, Complex base, std::size_t depth,
                          std::size_t cap) {
    const std::array<Complex, 1> bases{base};
    return backward_orbit(maps, bases, depth, cap);
}

PointCloud backward_orbit(std::span<const MapDescriptor> maps, std::span<const Complex> bases,
                          std::size_t depth, std::size_t cap) {
    if (bases.empty()) throw DomainError("backward_orbit: no base point");
    if (cap == 0) throw DomainError("backward_orbit: cap must be >= 1");
    if (maps.size() > 1 && depth > maps.size()) {
        throw DomainError("backward_orbit: map sequence shorter than the depth");
    }
    for (const Complex& base : bases) {
        if (!map_at(maps, 0).domain().K.contains_closed(base, 1e-9)) {
            throw DomainError("backward_orbit: base point lies outside K");
        }
    }
    PointCloud cloud;
    cloud.depth = depth;
    cloud.points.assign(bases.begin(), bases.end());
    std::vector<Complex> next;
    for (std::size_t level = 0; level < depth; ++level) {
        const MapDescriptor& map = map_at(maps, depth - 1 - level);
        next.clear();
        next.reserve(cloud.points.size() * static_cast<std::size_t>(map.degree()));
        for (const Complex& y : cloud.points) {
            const PreimageSet set = preimages_or_empty(map, y);
            next.insert(next.end(), set.points.begin(), set.points.end());
        }
        if (next.size() > cap) {
            const std::size_t stride = (next.size() + cap - 1) / cap;
            std::size_t kept = 0;
            for (std::size_t i = 0; i < next.size(); i += stride) next[kept++] = next[i];
            next.resize(kept);
            cloud.capped = true;
        }
        cloud.points.swap(next);
        if (cloud.points.empty()) break;
    }
    return cloud;
}

std::size_t orbit_depth(const DomainConstants& constants, double r_min) {
    if (!(r_min > 0.0)) throw DomainError("orbit_depth: r_min must be positive");
    if (!(constants.beta > 1.0)) throw DomainError("orbit_depth: beta must exceed 1");
    const double ratio = 2.0 * constants.diam_K / r_min;
    if (ratio <= 1.0) return 0;
    return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(constants.beta)));
}

double chart_distance(ChartPoint a, ChartPoint b) {
    double dt = std::abs(a.theta - b.theta);
    dt = std::fmod(dt, kTwoPi);
    dt = std::min(dt, kTwoPi - dt);
    return std::hypot(a.u - b.u, dt);
}

std::vector<ChartPoint> chart_points(const PointCloud& cloud) {
    std::vector<ChartPoint> out;
    out.reserve(cloud.points.size());
    for (const Complex& z : cloud.points) out.push_back(to_chart(z));
    return out;
}

double chart_diameter(std::span<const ChartPoint> points) {
    if (points.empty()) return 0.0;
    double u0 = points.front().u;
    double u1 = u0;
    double t0 = points.front().theta;
    double t1 = t0;
    for (const ChartPoint& p : points) {
        u0 = std::min(u0, p.u);
        u1 = std::max(u1, p.u);
        t0 = std::min(t0, p.theta);
        t1 = std::max(t1, p.theta);
    }
    return std::hypot(u1 - u0, std::min(t1 - t0, kPi));
}

double median_nn_spacing(std::span<const ChartPoint> points, std::size_t max_queries) {
    if (points.size() < 2) throw DomainError("median_nn_spacing: need at least 2 points");
    const double extent = std::max(chart_diameter(points), 1e-12);
    const double cell = extent / std::sqrt(static_cast<double>(points.size()));
    const detail::ChartGrid grid(points, cell);
    const std::size_t queries = std::min(max_queries, points.size());
    const std::size_t stride = points.size() / queries;
    std::vector<double> d(queries);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t q = 0; q < queries; ++q) d[q] = grid.nearest(q * stride);
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

std::vector<double> default_radii(double diameter, std::size_t count, double decades) {
    if (!(diameter > 0.0)) throw DomainError("default_radii: diameter must be positive");
    return log_radii(diameter / 8.0, count, decades);
}

std::vector<double> log_radii(double top, std::size_t count, double decades) {
    if (!(top > 0.0)) throw DomainError("log_radii: top radius must be positive");
    if (count < 2) throw DomainError("log_radii: need at least 2 radii");
    std::vector<double> radii(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = top * std::pow(10.0, -decades * static_cast<double>(i) / static_cast<double>(count - 1));
        // Snap to 2 pi / m so the angular columns tile the circle exactly.
        radii[i] = kTwoPi / std::max(1.0, std::round(kTwoPi / r));
    }
    return radii;
}

std::size_t occupied_boxes(std::span<const ChartPoint> points, double r, double du, double dtheta) {
    // Columns wrap around the circle; the last one is narrower when r does
    // not divide 2 pi.
    const auto columns = static_cast<std::int64_t>(std::ceil(kTwoPi / r - 1e-9));
    std::vector<std::uint64_t> keys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto iu = static_cast<std::int64_t>(std::floor((points[i].u + du) / r));
        auto it = static_cast<std::int64_t>(std::floor((points[i].theta + kPi + dtheta) / r));
        it = ((it % columns) + columns) % columns;
        keys[i] = (static_cast<std::uint64_t>(iu + (std::int64_t{1} << 31)) << 32) ^
                  static_cast<std::uint64_t>(it + (std::int64_t{1} << 31));
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

BoxCount box_dimension(const PointCloud& cloud, std::vector<double> radii) {
    const std::vector<ChartPoint> pts = chart_points(cloud);
    if (pts.size() < 2) throw ResolutionError("box_dimension: cloud has fewer than 2 points");
    if (radii.empty()) radii = default_radii(chart_diameter(pts));
    if (radii.size() < 2) throw DomainError("box_dimension: need at least 2 radii");
    std::sort(radii.begin(), radii.end(), std::greater<>());
    if (!(radii.back() > 0.0)) throw DomainError("box_dimension: radii must be positive");

    const double spacing = median_nn_spacing(pts);
    if (spacing > radii.back()) {
        std::ostringstream msg;
        msg << "cloud spacing " << spacing << " exceeds the smallest radius " << radii.back()
            << "; increase the orbit depth";
        throw ResolutionError(msg.str());
    }

    BoxCount out;
    out.radii = radii;
    out.counts.assign(radii.size(), 0.0);
    out.per_offset.assign(kBoxOffsets, std::vector<double>(radii.size(), 0.0));
    // Fractional shifts kept off 0 so sets lying on |z| = 1 (u = 0) never sit on
    // a grid line.
    static constexpr double kShift[kBoxOffsets][2] = {
        {0.125, 0.125}, {0.625, 0.375}, {0.375, 0.625}, {0.875, 0.875}};
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < radii.size(); ++i) {
        double sum = 0.0;
        for (std::size_t o = 0; o < kBoxOffsets; ++o) {
            const double n = static_cast<double>(
                occupied_boxes(pts, radii[i], kShift[o][0] * radii[i], kShift[o][1] * radii[i]));
            out.per_offset[o][i] = n;
            sum += n;
        }
        out.counts[i] = sum / static_cast<double>(kBoxOffsets);
    }

    std::vector<double> x(radii.size());
    std::vector<double> y(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        x[i] = -std::log(radii[i]);
        y[i] = std::log(out.counts[i]);
    }
    out.slope = least_squares_slope(x, y);
    out.running_slope.assign(radii.size(), 0.0);
    out.max_pair_slope = -std::numeric_limits<double>::infinity();
    out.min_pair_slope = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < radii.size(); ++i) {
        const double s = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        out.running_slope[i] = s;
        out.max_pair_slope = std::max(out.max_pair_slope, s);
        out.min_pair_slope = std::min(out.min_pair_slope, s);
    }
    return out;
}

void write_box_csv(std::ostream& out, const BoxCount& result) {
    out << "r,N_r,running_slope\n";
    for (std::size_t i = 0; i < result.radii.size(); ++i) {
        out << result.radii[i] << ',' << result.counts[i] << ',' << result.running_slope[i] << '\n';
    }
}

}  // namespace hdim
