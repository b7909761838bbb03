#include "hdim/components.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "chart_grid.hpp"
#include "hdim/errors.hpp"
#include "hdim/solver.hpp"

namespace hdim {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

bool chart_less(const ChartPoint& a, const ChartPoint& b) {
    return a.u < b.u || (a.u == b.u && a.theta < b.theta);
}

bool near_any(const detail::ChartGrid& grid, ChartPoint p, double radius) { return grid.near(p, radius); }

// Forward image of a cloud point, or nothing if the map is undefined there.
std::optional<ChartPoint> forward(const MapDescriptor& map, Complex z) {
    try {
        const Complex w = evaluate(map, z);
        if (!map.domain().K.contains_closed(w, 1e-9)) return std::nullopt;
        return to_chart(w);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

// Tarjan's algorithm; returns the component index of every vertex.
std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>>& out) {
    const std::size_t n = out.size();
    constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> index(n, kUnset), low(n, 0), scc(n, kUnset), stack;
    std::vector<bool> on_stack(n, false);
    std::size_t counter = 0;
    std::size_t found = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (std::size_t w : out[v]) {
            if (index[w] == kUnset) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::size_t w = kUnset;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                scc[w] = found;
            } while (w != v);
            ++found;
        }
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (index[v] == kUnset) visit(v);
    }
    return scc;
}

}  // namespace

ComponentDecomposition decompose(const PointCloud& cloud, const MapDescriptor& map,
                                 std::optional<double> delta) {
    if (cloud.points.size() < 2) throw ScaleError("decompose: cloud needs at least 2 points");
    ComponentDecomposition d{cloud, chart_points(cloud), map, 0.0, {}, {}, {}, {}, {}, {}, {}, {}};
    const double spacing = median_nn_spacing(d.chart);
    d.delta = delta.value_or(kDefaultDeltaFactor * spacing);
    if (!(d.delta > spacing)) {
        std::ostringstream msg;
        msg << "delta " << d.delta << " is below the cloud spacing " << spacing;
        throw ScaleError(msg.str());
    }

    // Single linkage. Cells are at most delta/2 wide, so each cell is
    // connected; neighbouring cells are joined by their first close pair.
    const std::size_t np = d.chart.size();
    DisjointSets sets(np);
    {
        const detail::ChartGrid fine(d.chart, 0.5 * d.delta, true);
        const std::int64_t ring = fine.ring_for(d.delta);
        for (std::uint64_t key : fine.keys()) {
            const auto& a = fine.cell(key);
            for (std::size_t q = a.begin + 1; q < a.end; ++q) sets.unite(fine.point(a.begin), fine.point(q));
        }
        const std::int64_t span_t = std::min<std::int64_t>(2 * ring + 1, fine.n_theta());
        for (std::uint64_t key : fine.keys()) {
            const auto& a = fine.cell(key);
            for (std::int64_t du = 0; du <= ring; ++du) {
                for (std::int64_t k = 0; k < span_t; ++k) {
                    const auto* b = fine.find(a.iu + du, a.it - ring + k);
                    if (b == nullptr || b == &a) continue;
                    if (du == 0 && fine.flat(b->iu, b->it) < key) continue;
                    if (sets.find(fine.point(a.begin)) == sets.find(fine.point(b->begin))) continue;
                    bool joined = false;
                    for (std::size_t x = a.begin; x < a.end && !joined; ++x) {
                        const ChartPoint px = d.chart[fine.point(x)];
                        for (std::size_t y = b->begin; y < b->end; ++y) {
                            if (chart_distance(px, d.chart[fine.point(y)]) <= d.delta) {
                                sets.unite(fine.point(x), fine.point(y));
                                joined = true;
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
    const detail::ChartGrid grid(d.chart, d.delta);
    std::vector<std::size_t> root_min(np, np);
    for (std::size_t i = 0; i < np; ++i) {
        const std::size_t r = sets.find(i);
        if (root_min[r] == np || chart_less(d.chart[i], d.chart[root_min[r]])) root_min[r] = i;
    }
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < np; ++i) {
        if (root_min[i] != np) roots.push_back(i);
    }
    std::sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) {
        return chart_less(d.chart[root_min[a]], d.chart[root_min[b]]);
    });
    std::vector<std::size_t> label(np, 0);
    for (std::size_t c = 0; c < roots.size(); ++c) label[roots[c]] = c;
    d.components.assign(roots.size(), {});
    d.component_of.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
        d.component_of[i] = label[sets.find(i)];
        d.components[d.component_of[i]].push_back(i);
    }

    // Transitions from forward images of every point.
    const std::size_t m = d.components.size();
    d.transition.assign(m, std::vector<bool>(m, false));
    std::vector<std::optional<ChartPoint>> image(np);
    for (std::size_t i = 0; i < np; ++i) image[i] = forward(map, cloud.points[i]);
    for (std::size_t i = 0; i < np; ++i) {
        if (!image[i]) continue;
        const ChartPoint p = *image[i];
        // Components are delta apart, so at most one lies within delta/2.
        grid.visit_until(p, 1, [&](std::size_t q) {
            if (chart_distance(p, d.chart[q]) > 0.5 * d.delta) return false;
            d.transition[d.component_of[q]][d.component_of[i]] = true;
            return true;
        });
    }

    // Markov-like check: the images of Lambda_i must come within delta/2 of
    // every point of Lambda_j whenever they meet it.
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<ChartPoint> images;
        for (std::size_t p : d.components[i]) {
            if (image[p]) images.push_back(*image[p]);
        }
        if (images.empty()) continue;
        const detail::ChartGrid image_grid(images, 0.5 * d.delta);
        for (std::size_t j = 0; j < m; ++j) {
            if (!d.transition[j][i]) continue;
            std::size_t missed = 0;
            for (std::size_t p : d.components[j]) {
                if (!near_any(image_grid, d.chart[p], 0.5 * d.delta)) ++missed;
            }
            if (missed > 0) {
                std::ostringstream msg;
                msg << "f(component " << i << ") meets component " << j << " but misses " << missed
                    << " of its " << d.components[j].size() << " points at delta/2";
                d.warnings.push_back(msg.str());
            }
        }
    }

    // Classes and their order.
    std::vector<std::vector<std::size_t>> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (d.transition[j][i]) out[i].push_back(j);
        }
    }
    const std::vector<std::size_t> scc = strongly_connected(out);
    std::size_t nscc = 0;
    for (std::size_t v : scc) nscc = std::max(nscc, v + 1);
    std::vector<std::size_t> first(nscc, m);
    for (std::size_t i = 0; i < m; ++i) first[scc[i]] = std::min(first[scc[i]], i);
    std::vector<std::size_t> by_first(nscc);
    std::iota(by_first.begin(), by_first.end(), 0);
    std::sort(by_first.begin(), by_first.end(), [&](std::size_t a, std::size_t b) { return first[a] < first[b]; });
    std::vector<std::size_t> renum(nscc);
    for (std::size_t k = 0; k < nscc; ++k) renum[by_first[k]] = k;
    d.classes.assign(nscc, {});
    d.class_of.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        d.class_of[i] = renum[scc[i]];
        d.classes[d.class_of[i]].push_back(i);
    }
    d.precedes.assign(nscc, std::vector<bool>(nscc, false));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j : out[i]) {
            const std::size_t a = d.class_of[i];
            const std::size_t b = d.class_of[j];
            if (a != b && !d.precedes[a][b]) {
                d.precedes[a][b] = true;
                d.condensation_edges.emplace_back(a, b);
            }
        }
    }
    std::sort(d.condensation_edges.begin(), d.condensation_edges.end());
    for (std::size_t k = 0; k < nscc; ++k) {
        for (std::size_t a = 0; a < nscc; ++a) {
            if (!d.precedes[a][k]) continue;
            for (std::size_t b = 0; b < nscc; ++b) {
                if (d.precedes[k][b]) d.precedes[a][b] = true;
            }
        }
    }
    return d;
}

std::vector<double> class_mask(const ComponentDecomposition& decomp, std::size_t cls,
                               const GridFunction& grid) {
    if (cls >= decomp.classes.size()) throw DomainError("class_mask: no such class");
    std::vector<ChartPoint> pts;
    const bool radial_only = grid.shape().n_angular == 1;
    for (std::size_t c : decomp.classes[cls]) {
        for (std::size_t p : decomp.components[c]) {
            ChartPoint q = decomp.chart[p];
            if (radial_only) q.theta = 0.0;
            pts.push_back(q);
        }
    }
    const detail::ChartGrid index(pts, decomp.delta);
    std::vector<double> mask(grid.size(), 0.0);
    const GridShape shape = grid.shape();
    for (std::size_t i = 0; i < shape.n_radial; ++i) {
        for (std::size_t j = 0; j < shape.n_angular; ++j) {
            const ChartPoint node{grid.u_at(i), radial_only ? 0.0 : grid.theta_at(j)};
            if (near_any(index, node, decomp.delta)) mask[i * shape.n_angular + j] = 1.0;
        }
    }
    return mask;
}

namespace {

// (1/n) log max of the masked iterate for every mask; -inf when it dies out.
std::vector<double> masked_pressures(const TransferPlan& plan, const std::vector<std::vector<double>>& masks,
                                     double s, std::size_t n) {
    const std::vector<double> weights = plan.weights(s);
    std::vector<double> out;
    for (const std::vector<double>& mask : masks) {
        std::vector<double> phi = mask;
        std::vector<double> next(phi.size());
        double log_scale = 0.0;
        bool alive = true;
        for (std::size_t k = 0; k < n; ++k) {
            plan.apply(weights, phi, next);
            double mx = 0.0;
            for (std::size_t q = 0; q < next.size(); ++q) {
                next[q] *= mask[q];
                mx = std::max(mx, next[q]);
            }
            if (!(mx > 0.0)) {
                alive = false;
                break;
            }
            for (std::size_t q = 0; q < next.size(); ++q) phi[q] = next[q] / mx;
            log_scale += std::log(mx);
        }
        out.push_back(alive ? log_scale / static_cast<double>(n) : -std::numeric_limits<double>::infinity());
    }
    return out;
}

std::vector<std::vector<double>> class_masks(const ComponentDecomposition& decomp, GridShape grid) {
    const GridFunction base(decomp.map.domain().K, grid, 0.0);
    std::vector<std::vector<double>> masks;
    for (std::size_t cls = 0; cls < decomp.classes.size(); ++cls) masks.push_back(class_mask(decomp, cls, base));
    return masks;
}

}  // namespace

std::vector<double> class_pressure(const ComponentDecomposition& decomp, double s, std::size_t n,
                                   GridShape grid) {
    if (n == 0) throw DomainError("class_pressure: n must be >= 1");
    const TransferPlan plan(decomp.map, grid, TransferOptions{true});
    return masked_pressures(plan, class_masks(decomp, grid), s, n);
}

std::vector<std::size_t> invariant_subcloud(const ComponentDecomposition& decomp, std::size_t cls) {
    if (cls >= decomp.classes.size()) throw DomainError("invariant_subcloud: no such class");
    std::vector<ChartPoint> pts;
    std::vector<std::size_t> members;
    for (std::size_t c : decomp.classes[cls]) {
        for (std::size_t p : decomp.components[c]) {
            pts.push_back(decomp.chart[p]);
            members.push_back(p);
        }
    }
    const detail::ChartGrid index(pts, 0.5 * decomp.delta);
    std::vector<std::size_t> kept;
    for (std::size_t p : members) {
        Complex z = decomp.cloud.points[p];
        bool stays = true;
        for (std::size_t k = 0; k < decomp.cloud.depth && stays; ++k) {
            const auto image = forward(decomp.map, z);
            stays = image && near_any(index, *image, 0.5 * decomp.delta);
            if (stays) z = from_chart(*image);
        }
        if (stays) kept.push_back(p);
    }
    return kept;
}

CriticalClass critical_class(const ComponentDecomposition& decomp, std::size_t n, double tol,
                             GridShape grid, double s_min, double s_max) {
    if (decomp.classes.empty()) throw DomainError("critical_class: no classes");
    CriticalClass result;
    const std::size_t k = decomp.classes.size();
    result.class_roots.assign(k, std::nullopt);
    if (n == 0) throw DomainError("critical_class: n must be >= 1");
    const TransferPlan plan(decomp.map, grid, TransferOptions{true});
    const std::vector<std::vector<double>> masks = class_masks(decomp, grid);
    for (std::size_t cls = 0; cls < k; ++cls) {
        const std::vector<std::vector<double>> mask{masks[cls]};
        auto f = [&](double s) { return masked_pressures(plan, mask, s, n)[0]; };
        try {
            result.class_roots[cls] = bisect_decreasing(f, s_min, s_max, tol, 200).mid();
        } catch (const NoSignChange&) {
            // A transient class or one with no zero in range.
        }
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : result.class_roots) {
        if (r) best = std::max(best, *r);
    }
    if (!std::isfinite(best)) throw NoSignChange("critical_class: no class pressure changes sign");
    std::vector<std::size_t> maximisers;
    for (std::size_t cls = 0; cls < k; ++cls) {
        if (result.class_roots[cls] && *result.class_roots[cls] >= best - tol) maximisers.push_back(cls);
    }
    result.class_id = maximisers.front();
    for (std::size_t a : maximisers) {
        const bool minimal = std::none_of(maximisers.begin(), maximisers.end(),
                                          [&](std::size_t b) { return decomp.precedes[b][a]; });
        if (minimal) {
            result.class_id = a;
            break;
        }
    }
    result.s_crit = *result.class_roots[result.class_id];
    result.invariant_points = invariant_subcloud(decomp, result.class_id);
    return result;
}

bool reaches(const ComponentDecomposition& decomp, std::size_t a, std::size_t b, std::size_t steps) {
    const std::size_t np = decomp.chart.size();
    if (a >= np || b >= np) throw DomainError("reaches: point index out of range");
    const ChartPoint target = decomp.chart[b];
    std::vector<Complex> ball;
    for (std::size_t q = 0; q < np; ++q) {
        if (chart_distance(decomp.chart[a], decomp.chart[q]) <= decomp.delta) ball.push_back(decomp.cloud.points[q]);
    }
    for (std::size_t k = 0; k <= steps; ++k) {
        for (const Complex& z : ball) {
            if (chart_distance(to_chart(z), target) <= decomp.delta) return true;
        }
        if (k == steps) break;
        std::vector<Complex> next;
        for (const Complex& z : ball) {
            if (const auto image = forward(decomp.map, z)) next.push_back(from_chart(*image));
        }
        ball.swap(next);
    }
    return false;
}

}  // namespace hdim
