#include "hdim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

constexpr double kMonotoneSlack = 1e-12;

void require_options(const SolverOptions& options) {
    if (!(options.tol > 0.0)) throw DomainError("solver: tol must be positive");
    if (!(options.s_min < options.s_max)) throw DomainError("solver: empty s range");
    if (options.max_iter == 0) throw DomainError("solver: max_iter must be >= 1");
}

// Memoised pressure evaluations along one run, shared by both roots.
class BracketCurve {
public:
    BracketCurve(std::span<const MapDescriptor> maps, std::size_t n, const SolverOptions& options)
        : plans_(maps.size() > 1 ? maps.first(std::min(n, maps.size())) : maps, options.grid,
                 options.transfer),
          n_(n) {}

    const PressureEstimate& at(double s) {
        auto it = cache_.find(s);
        if (it == cache_.end()) it = cache_.emplace(s, pressure_bracket(s, plans_, n_)).first;
        return it->second;
    }

private:
    PlanSequence plans_;
    std::size_t n_;
    std::map<double, PressureEstimate> cache_;
};

// Tail-window proxies (inf of (1/k) log m_k, sup of (1/k) log M_k).
class TailCurve {
public:
    TailCurve(std::span<const MapDescriptor> maps, std::size_t n, const SolverOptions& options)
        : plans_(maps.size() > 1 ? maps.first(std::min(n, maps.size())) : maps, options.grid,
                 options.transfer),
          n_(n) {}

    std::pair<double, double> at(double s) {
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
        const GridFunction one(plans_.K(), plans_.shape(), 1.0);
        const IterationTrace trace = iterate_sequence(s, plans_, n_, one);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t k = (n_ + 1) / 2; k <= n_; ++k) {
            if (k == 0) continue;
            const StepRecord& r = trace.steps[k - 1];
            lo = std::min(lo, r.log_m / static_cast<double>(k));
            hi = std::max(hi, r.log_M / static_cast<double>(k));
        }
        return cache_.emplace(s, std::make_pair(lo, hi)).first->second;
    }

private:
    PlanSequence plans_;
    std::size_t n_;
    std::map<double, std::pair<double, double>> cache_;
};

}  // namespace

RootBracket bisect_decreasing(const std::function<double(double)>& f, double lo, double hi,
                              double tol, std::size_t max_iter) {
    RootBracket b{lo, hi, f(lo), f(hi), 0};
    if (!(b.f_lo >= 0.0 && b.f_hi <= 0.0 && b.f_lo > b.f_hi)) {
        std::ostringstream msg;
        msg << "pressure has no sign change on [" << lo << ", " << hi << "]: P(" << lo
            << ") = " << b.f_lo << ", P(" << hi << ") = " << b.f_hi;
        throw NoSignChange(msg.str());
    }
    while (b.hi - b.lo > tol) {
        if (b.iterations == max_iter) {
            std::ostringstream msg;
            msg << "bisection did not reach tol " << tol << " in " << max_iter << " iterations";
            throw ConvergenceError(msg.str());
        }
        const double mid = 0.5 * (b.lo + b.hi);
        const double fm = f(mid);
        const double slack = kMonotoneSlack * (1.0 + std::abs(fm));
        if (!(fm <= b.f_lo + slack && fm >= b.f_hi - slack)) {
            std::ostringstream msg;
            msg << "pressure is not decreasing: P(" << b.lo << ") = " << b.f_lo << ", P(" << mid
                << ") = " << fm << ", P(" << b.hi << ") = " << b.f_hi;
            throw MonotonicityError(msg.str());
        }
        if (fm > 0.0) {
            b.lo = mid;
            b.f_lo = fm;
        } else {
            b.hi = mid;
            b.f_hi = fm;
        }
        ++b.iterations;
    }
    return b;
}

DimensionResult solve_dimension(std::span<const MapDescriptor> maps, std::size_t n,
                                SolverOptions options) {
    require_options(options);
    if (n == 0) throw DomainError("solve_dimension: n must be >= 1");
    BracketCurve curve(maps, n, options);
    const RootBracket lower = bisect_decreasing(
        [&](double s) { return curve.at(s).lower; }, options.s_min, options.s_max, options.tol,
        options.max_iter);
    const RootBracket upper = bisect_decreasing(
        [&](double s) { return curve.at(s).upper; }, options.s_min, options.s_max, options.tol,
        options.max_iter);

    DimensionResult result;
    result.s_lower = lower.lo;
    result.s_upper = upper.hi;
    result.s_crit = 0.5 * (result.s_lower + result.s_upper);
    result.n_used = n;
    result.grid = options.grid;
    const PressureEstimate& at_root = curve.at(result.s_crit);
    result.diagnostics.bracket_width_at_root = at_root.width();
    result.diagnostics.clamped_points = at_root.clamped_points;
    return result;
}

CriticalExponents critical_exponents(std::span<const MapDescriptor> maps, std::size_t n,
                                     SolverOptions options) {
    require_options(options);
    if (n < 2) throw DomainError("critical_exponents: n must be >= 2");
    TailCurve curve(maps, n, options);
    auto root = [&](bool upper) {
        auto f = [&](double s) {
            const auto v = curve.at(s);
            return upper ? v.second : v.first;
        };
        if (f(options.s_min) <= 0.0) return options.s_min;
        return bisect_decreasing(f, options.s_min, options.s_max, options.tol, options.max_iter)
            .mid();
    };
    CriticalExponents out;
    out.lower = root(false);
    out.upper = root(true);
    return out;
}

EnsembleStats ensemble_statistics(std::span<const MapDescriptor> maps, SampleGrid grid) {
    if (maps.empty()) throw DomainError("ensemble_statistics: empty sequence");
    EnsembleStats stats;
    for (const MapDescriptor& map : maps) {
        const DerivativeRange range = derivative_range(map, grid);
        if (range.min_local_degree < 1) {
            throw DomainError("ensemble_statistics: some point of K has no preimage in K");
        }
        stats.E_log_dmin += std::log(static_cast<double>(range.min_local_degree));
        stats.E_log_dmax += std::log(static_cast<double>(range.max_local_degree));
        stats.E_log_sup_Df += std::log(range.sup);
        stats.E_log_sup_invDf += -std::log(range.inf);
    }
    const double count = static_cast<double>(maps.size());
    stats.E_log_dmin /= count;
    stats.E_log_dmax /= count;
    stats.E_log_sup_Df /= count;
    stats.E_log_sup_invDf /= count;
    return stats;
}

DimensionBounds dimension_bounds(const EnsembleStats& stats) {
    if (!(stats.E_log_sup_Df > 0.0)) {
        throw DegenerateBound("E log ||Df|| must be positive");
    }
    if (!(-stats.E_log_sup_invDf > 0.0)) {
        throw DegenerateBound("-E log ||1/Df|| must be positive (maps are not expanding on average)");
    }
    return {stats.E_log_dmin / stats.E_log_sup_Df, stats.E_log_dmax / -stats.E_log_sup_invDf};
}

}  // namespace hdim
