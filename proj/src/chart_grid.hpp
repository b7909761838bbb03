#pragma once

// Sparse bucket grid over chart points with a periodic angle axis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "hdim/boxcount.hpp"

namespace hdim::detail {

class ChartGrid {
public:
    struct Cell {
        std::size_t begin;
        std::size_t end;
        std::int64_t iu;
        std::int64_t it;
    };

    // Cells are at least `cell` wide on both axes, so every point within
    // `cell` of a query lies in the 3 x 3 block around it. With fine = true
    // they are at most `cell` wide instead.
    ChartGrid(std::span<const ChartPoint> points, double cell, bool fine = false) : points_(points) {
        u_min_ = std::numeric_limits<double>::infinity();
        double u_max = -u_min_;
        for (const ChartPoint& p : points) {
            u_min_ = std::min(u_min_, p.u);
            u_max = std::max(u_max, p.u);
        }
        const double columns = kTwoPi / cell;
        n_theta_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(fine ? std::ceil(columns) : std::floor(columns)));
        h_theta_ = kTwoPi / static_cast<double>(n_theta_);
        h_u_ = fine ? cell : std::min(cell, h_theta_);
        n_u_ = static_cast<std::int64_t>(std::floor((u_max - u_min_) / h_u_)) + 1;

        std::vector<std::pair<std::uint64_t, std::size_t>> keyed(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            keyed[i] = {flat(cell_u(points[i].u), cell_t(points[i].theta)), i};
        }
        std::sort(keyed.begin(), keyed.end());
        order_.resize(points.size());
        for (std::size_t q = 0; q < keyed.size(); ++q) {
            order_[q] = keyed[q].second;
            const std::uint64_t key = keyed[q].first;
            auto [it, fresh] = cells_.try_emplace(key, Cell{q, q + 1, 0, 0});
            if (fresh) {
                it->second.iu = static_cast<std::int64_t>(key / static_cast<std::uint64_t>(n_theta_));
                it->second.it = static_cast<std::int64_t>(key % static_cast<std::uint64_t>(n_theta_));
                keys_.push_back(key);
            } else {
                it->second.end = q + 1;
            }
        }
    }

    std::int64_t cell_u(double u) const {
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((u - u_min_) / h_u_)), 0,
                                        n_u_ - 1);
    }
    std::int64_t cell_t(double theta) const {
        const auto j = static_cast<std::int64_t>(std::floor((theta + kPi) / h_theta_));
        return wrap(j);
    }
    std::int64_t wrap(std::int64_t j) const { return ((j % n_theta_) + n_theta_) % n_theta_; }
    std::uint64_t flat(std::int64_t iu, std::int64_t it) const {
        return static_cast<std::uint64_t>(iu) * static_cast<std::uint64_t>(n_theta_) +
               static_cast<std::uint64_t>(it);
    }

    const Cell* find(std::int64_t iu, std::int64_t it) const {
        if (iu < 0 || iu >= n_u_) return nullptr;
        const auto cell = cells_.find(flat(iu, wrap(it)));
        return cell == cells_.end() ? nullptr : &cell->second;
    }

    // Calls f(index) for points in cells within `ring` cells of p until f
    // returns true; returns whether it did.
    template <typename F>
    bool visit_until(ChartPoint p, std::int64_t ring, F&& f) const {
        const std::int64_t iu = cell_u(p.u);
        const std::int64_t it = cell_t(p.theta);
        const std::int64_t span_t = std::min<std::int64_t>(2 * ring + 1, n_theta_);
        for (std::int64_t du = -ring; du <= ring; ++du) {
            for (std::int64_t k = 0; k < span_t; ++k) {
                const Cell* cell = find(iu + du, it - ring + k);
                if (cell == nullptr) continue;
                for (std::size_t q = cell->begin; q < cell->end; ++q) {
                    if (f(order_[q])) return true;
                }
            }
        }
        return false;
    }

    template <typename F>
    void visit(ChartPoint p, std::int64_t ring, F&& f) const {
        visit_until(p, ring, [&](std::size_t q) {
            f(q);
            return false;
        });
    }

    // Some point within `radius` (<= the cell width) of p.
    bool near(ChartPoint p, double radius) const {
        return visit_until(p, 1, [&](std::size_t q) { return chart_distance(p, points_[q]) <= radius; });
    }

    // Distance from points[self] to its nearest other point.
    double nearest(std::size_t self) const {
        const ChartPoint p = points_[self];
        double best = std::numeric_limits<double>::infinity();
        const double h = std::min(h_u_, h_theta_);
        const std::int64_t max_ring = std::max(n_u_, n_theta_);
        for (std::int64_t ring = 1; ring <= max_ring; ++ring) {
            visit(p, ring, [&](std::size_t q) {
                if (q != self) best = std::min(best, chart_distance(p, points_[q]));
            });
            // Every point closer than ring * h lies within the visited cells.
            if (best <= static_cast<double>(ring) * h) break;
        }
        return best;
    }

    // Rings needed so the visited block covers every point within radius.
    std::int64_t ring_for(double radius) const {
        return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(radius / std::min(h_u_, h_theta_))));
    }
    double h_u() const { return h_u_; }
    double h_theta() const { return h_theta_; }
    std::int64_t n_theta() const { return n_theta_; }

    std::span<const ChartPoint> points() const { return points_; }
    const std::vector<std::uint64_t>& keys() const { return keys_; }
    const Cell& cell(std::uint64_t key) const { return cells_.at(key); }
    std::size_t point(std::size_t slot) const { return order_[slot]; }

private:
    std::span<const ChartPoint> points_;
    double u_min_ = 0.0;
    double h_u_ = 1.0;
    double h_theta_ = 1.0;
    std::int64_t n_u_ = 1;
    std::int64_t n_theta_ = 1;
    std::unordered_map<std::uint64_t, Cell> cells_;
    std::vector<std::uint64_t> keys_;  // occupied cells in increasing order
    std::vector<std::size_t> order_;
};

}  // namespace hdim::detail
