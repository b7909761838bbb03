#pragma once

// Zeros of the pressure: s_crit from the m_n / M_n brackets, tail-window
// critical exponents for time-dependent sequences, and the degree/dilation
// bounds on the dimension.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "hdim/maps.hpp"
#include "hdim/transfer.hpp"

namespace hdim {

struct SolverOptions {
    double s_min = 0.0;
    double s_max = 2.2;
    double tol = 1e-6;
    std::size_t max_iter = 60;
    GridShape grid{};
    TransferOptions transfer{};
};

struct DimensionDiagnostics {
    double bracket_width_at_root = 0.0;
    std::optional<double> eta_fit;
    std::size_t clamped_points = 0;
    std::optional<double> std_error;  // replica dispersion, random runs only
};

struct DimensionResult {
    double s_crit = 0.0;
    double s_lower = 0.0;  // root of (1/n) log m_n
    double s_upper = 0.0;  // root of (1/n) log M_n
    std::size_t n_used = 0;
    GridShape grid{};
    DimensionDiagnostics diagnostics{};
};

// Final bracket of a bisection on a decreasing function: f(lo) >= 0 >= f(hi).
struct RootBracket {
    double lo = 0.0;
    double hi = 0.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    std::size_t iterations = 0;

    double mid() const noexcept { return 0.5 * (lo + hi); }
};

// Throws NoSignChange unless f(lo) >= 0 >= f(hi) with f(lo) > f(hi), and
// MonotonicityError if a midpoint value falls outside [f(hi), f(lo)].
RootBracket bisect_decreasing(const std::function<double(double)>& f, double lo, double hi,
                              double tol, std::size_t max_iter);

DimensionResult solve_dimension(std::span<const MapDescriptor> maps, std::size_t n,
                                SolverOptions options = {});

struct CriticalExponents {
    double lower = 0.0;  // root of inf_{k in tail} (1/k) log m_k
    double upper = 0.0;  // root of sup_{k in tail} (1/k) log M_k
};

// Tail window is k in [ceil(n/2), n]. A proxy that is already <= 0 at s_min
// puts its exponent at s_min.
CriticalExponents critical_exponents(std::span<const MapDescriptor> maps, std::size_t n,
                                     SolverOptions options = {});

struct EnsembleStats {
    double E_log_dmin = 0.0;
    double E_log_dmax = 0.0;
    double E_log_sup_Df = 0.0;
    double E_log_sup_invDf = 0.0;  // E log ||1/Df||, negative for expanding maps
};

// Sample means over the sequence of the per-map degree and derivative extremes.
EnsembleStats ensemble_statistics(std::span<const MapDescriptor> maps, SampleGrid grid = {});

struct DimensionBounds {
    double lower = 0.0;  // E log d_min / E log ||Df||
    double upper = 0.0;  // E log d_max / (-E log ||1/Df||)

    bool contains(double s, double slack = 0.0) const noexcept {
        return s >= lower - slack && s <= upper + slack;
    }
};

// Throws DegenerateBound if a denominator is <= 0.
DimensionBounds dimension_bounds(const EnsembleStats& stats);

}  // namespace hdim
