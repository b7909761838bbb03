#pragma once

// Grid-discretised transfer operators
//   (L_{s,f} phi)(y) = sum_{x in f^{-1}y} Df(x)^{-s} phi(x)
// acting on positive functions sampled on K in the (log|z|, arg z) chart.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hdim/geometry.hpp"
#include "hdim/maps.hpp"

namespace hdim {

struct GridShape {
    std::size_t n_radial = 256;
    std::size_t n_angular = 256;
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Nodes u_i = -a + 2a i/(n_radial-1) (both boundary circles of K included)
// and theta_j = -pi + 2 pi j / n_angular (periodic).
class GridFunction {
public:
    GridFunction(HyperbolicAnnulus K, GridShape shape, double fill = 1.0);

    const HyperbolicAnnulus& K() const noexcept { return K_; }
    GridShape shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double& at(std::size_t i, std::size_t j) { return values_[i * shape_.n_angular + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * shape_.n_angular + j]; }

    double radial_step() const noexcept { return radial_step_; }
    double angular_step() const noexcept { return kTwoPi / static_cast<double>(shape_.n_angular); }
    double u_at(std::size_t i) const noexcept;
    double theta_at(std::size_t j) const noexcept;
    Complex node(std::size_t i, std::size_t j) const { return from_chart({u_at(i), theta_at(j)}); }

    // Bilinear in (u, theta); u is clamped to the band of K.
    double interpolate_chart(double u, double theta) const;
    double interpolate(Complex z) const;

    std::size_t nearest_node(Complex z) const;
    double min() const;
    double max() const;

private:
    HyperbolicAnnulus K_;
    GridShape shape_;
    double radial_step_;
    std::vector<double> values_;
};

inline constexpr double kPositivityFloor = 1e-300;

struct TransferOptions {
    // Nodes without preimages produce 0 instead of raising EmptyPreimage.
    bool allow_empty = false;
};

// Preimage stencil of one map on a fixed grid, reusable for every s.
// Preimages within half a radial cell outside K are clamped onto the
// boundary row and counted.
class TransferPlan {
public:
    TransferPlan(const MapDescriptor& map, GridShape shape, TransferOptions options = {});

    const MapDescriptor& map() const noexcept { return map_; }
    GridShape shape() const noexcept { return shape_; }
    std::size_t clamped_points() const noexcept { return clamped_; }
    std::size_t entries() const noexcept { return entries_.size(); }

    // Weights Df(x)^{-s}, one per stencil entry.
    std::vector<double> weights(double s) const;
    void apply(std::span<const double> weights, std::span<const double> in,
               std::span<double> out) const;
    GridFunction apply(double s, const GridFunction& phi) const;

private:
    struct Entry {
        std::uint32_t k00;  // lower-left node
        std::uint32_t k01;  // angular neighbour (wraps)
        double wu;          // radial fraction towards the next row
        double wt;          // angular fraction
        double log_df;
    };

    MapDescriptor map_;
    GridShape shape_;
    std::size_t clamped_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<Entry> entries_;
};

GridFunction apply_operator(double s, const MapDescriptor& map, const GridFunction& phi,
                            TransferOptions options = {});

// Stencils for every step of a sequence. Equal maps share one plan, so a
// stationary or periodic sequence costs one build per distinct map.
class PlanSequence {
public:
    PlanSequence(std::span<const MapDescriptor> maps, GridShape shape, TransferOptions options = {});

    // Same stationarity rule as map_at().
    const TransferPlan& at(std::size_t step) const;
    std::size_t length() const noexcept { return index_.size(); }
    std::size_t distinct() const noexcept { return plans_.size(); }
    std::size_t entries() const noexcept;
    GridShape shape() const noexcept { return shape_; }
    const HyperbolicAnnulus& K() const { return plans_.front().map().domain().K; }
    std::size_t plan_index(std::size_t step) const;
    const TransferPlan& plan(std::size_t index) const { return plans_[index]; }

private:
    GridShape shape_;
    std::vector<TransferPlan> plans_;
    std::vector<std::size_t> index_;
};

// A map list of length 1 is treated as a stationary sequence; otherwise
// step k uses maps[k] and the list must cover every step.
const MapDescriptor& map_at(std::span<const MapDescriptor> maps, std::size_t step);

struct StepRecord {
    double log_m = 0.0;       // log min of L^(k) phi0
    double log_M = 0.0;       // log max of L^(k) phi0
    double log_anchor = 0.0;  // log of L^(k) phi0 at the anchor node
    std::size_t clamped = 0;
};

struct IterationTrace {
    GridFunction field;       // L^(n) phi0 scaled by exp(-log_scale); max = 1
    double log_scale = 0.0;
    double log_anchor0 = 0.0;  // log phi0 at the anchor
    std::size_t anchor = 0;
    std::vector<StepRecord> steps;

    // log p_k = log(L phi_k)(anchor) with phi_k normalised at the anchor.
    std::vector<double> log_p() const;
};

struct IterationOptions {
    TransferOptions transfer{};
    // Anchor node; defaults to the node nearest z = 1.
    std::optional<std::size_t> anchor;
};

IterationTrace iterate_sequence(double s, std::span<const MapDescriptor> maps, std::size_t n,
                                const GridFunction& phi0, IterationOptions options = {});
IterationTrace iterate_sequence(double s, const PlanSequence& plans, std::size_t n,
                                const GridFunction& phi0, std::optional<std::size_t> anchor = {});

struct PressureEstimate {
    double s = 0.0;
    std::size_t n = 0;
    double lower = 0.0;  // (1/n) log m_n
    double upper = 0.0;  // (1/n) log M_n
    std::optional<double> cocycle;
    std::optional<double> std_error;
    std::optional<double> eta_fit;
    std::size_t clamped_points = 0;
    bool negative_s = false;

    double width() const noexcept { return upper - lower; }
};

PressureEstimate pressure_bracket(double s, std::span<const MapDescriptor> maps, std::size_t n,
                                  GridShape grid, TransferOptions options = {});
PressureEstimate pressure_bracket(double s, const PlanSequence& plans, std::size_t n);

// Normalised runs from phi0 = 1 at several s along one sequence, building
// each step's stencil once. cocycle is the mean of log p_k over
// k >= burn_in; lower/upper are (1/steps) log m and log M of the same run.
std::vector<PressureEstimate> cocycle_pressures(std::span<const double> s,
                                                std::span<const MapDescriptor> maps,
                                                std::size_t steps, GridShape grid,
                                                std::size_t burn_in);
std::vector<PressureEstimate> cocycle_pressures(std::span<const double> s, const PlanSequence& plans,
                                                std::size_t steps, std::size_t burn_in);

struct NormalizedRun {
    GridFunction h;                    // final section, h(anchor) = 1
    std::vector<double> log_p;         // per-step cocycle
    std::vector<double> successive;    // sup |h_k - h_{k-1}|
    std::vector<StepRecord> steps;
    std::size_t anchor = 0;
};

NormalizedRun normalized_iterate(double s, std::span<const MapDescriptor> maps, std::size_t steps,
                                 const GridFunction& phi0, std::optional<std::size_t> anchor = {});

// Mean of log p_k over k >= burn_in.
double cocycle_mean(std::span<const double> log_p, std::size_t burn_in);

struct ContractionFit {
    double eta = 0.0;
    std::size_t points = 0;  // (step, trial) samples above the round-off floor
};

// Least-squares fit of log sup|pi^n phi - pi^n phi'| against n over `trials`
// random positive pairs. Throws ContractionError if eta >= 1.
ContractionFit contraction_rate(double s, std::span<const MapDescriptor> maps, std::size_t trials,
                                std::size_t steps, GridShape grid, std::uint64_t seed = 1);

// Smallest n0 with 2 diam_K / beta^n0 <= delta_big.
std::size_t mixing_depth(const DomainConstants& constants, double beta);

struct MixingCheck {
    bool holds = false;
    double lhs_log = 0.0;  // log m_{n+n0}
    double rhs_log = 0.0;  // -s (n0 log ||Df|| + log c_n) + log M_n - log 2
};

// m_{n+n0} >= (||Df||^{n0} c_n)^{-s} M_n / 2 on a recorded trace.
MixingCheck check_mixing_bound(const IterationTrace& trace, std::size_t n, std::size_t n0,
                               double s, double sup_derivative, double c_n);

// CSV rows: step, m_k_log, M_k_log, log_p_k, clamped_points.
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

}  // namespace hdim
