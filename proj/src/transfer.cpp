#include "hdim/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

constexpr double kSnapTol = 1e-9;

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < kSnapTol ? r : x;
}

// Applies one operator per step, rebuilding the stencil only when the map
// changes from the previous step.
class Stepper {
public:
    Stepper(std::span<const MapDescriptor> maps, GridShape shape, double s, TransferOptions options)
        : maps_(maps), shape_(shape), s_(s), options_(options) {}

    std::size_t step(std::size_t k, std::span<const double> in, std::span<double> out) {
        const MapDescriptor& map = map_at(maps_, k);
        if (!plan_ || !(plan_->map() == map)) {
            plan_ = std::make_unique<TransferPlan>(map, shape_, options_);
            weights_ = plan_->weights(s_);
        }
        plan_->apply(weights_, in, out);
        return plan_->clamped_points();
    }

private:
    std::span<const MapDescriptor> maps_;
    GridShape shape_;
    double s_;
    TransferOptions options_;
    std::unique_ptr<TransferPlan> plan_;
    std::vector<double> weights_;
};

std::size_t default_anchor(const GridFunction& phi) { return phi.nearest_node(Complex{1.0, 0.0}); }

void require_shape(const MapDescriptor& map, const GridFunction& phi) {
    if (!(map.domain().K == phi.K())) {
        throw DomainError("grid function and map live on different K");
    }
}

double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }
double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

}  // namespace

GridFunction::GridFunction(HyperbolicAnnulus K, GridShape shape, double fill)
    : K_(K), shape_(shape), radial_step_(0.0) {
    if (shape.n_radial < 2 || shape.n_angular < 1) {
        throw DomainError("grid needs at least 2 radial and 1 angular nodes");
    }
    if (shape.n_radial * shape.n_angular > std::numeric_limits<std::uint32_t>::max() / 2) {
        throw DomainError("grid too large");
    }
    radial_step_ = 2.0 * K.half_width() / static_cast<double>(shape.n_radial - 1);
    values_.assign(shape.n_radial * shape.n_angular, fill);
}

double GridFunction::u_at(std::size_t i) const noexcept {
    return -K_.half_width() + radial_step_ * static_cast<double>(i);
}

double GridFunction::theta_at(std::size_t j) const noexcept {
    return -kPi + angular_step() * static_cast<double>(j);
}

double GridFunction::interpolate_chart(double u, double theta) const {
    const double a = K_.half_width();
    const double fu = (std::clamp(u, -a, a) + a) / radial_step_;
    const std::size_t i0 = std::min(static_cast<std::size_t>(fu), shape_.n_radial - 2);
    const double wu = std::clamp(fu - static_cast<double>(i0), 0.0, 1.0);
    const std::size_t na = shape_.n_angular;
    std::size_t j0 = 0;
    std::size_t j1 = 0;
    double wt = 0.0;
    if (na > 1) {
        const double ft = (theta + kPi) / angular_step();
        const double fl = std::floor(ft);
        wt = ft - fl;
        const long long jj = static_cast<long long>(fl);
        const long long n = static_cast<long long>(na);
        j0 = static_cast<std::size_t>(((jj % n) + n) % n);
        j1 = (j0 + 1) % na;
    }
    const double lo = (1.0 - wt) * at(i0, j0) + wt * at(i0, j1);
    const double hi = (1.0 - wt) * at(i0 + 1, j0) + wt * at(i0 + 1, j1);
    return (1.0 - wu) * lo + wu * hi;
}

double GridFunction::interpolate(Complex z) const {
    const ChartPoint p = to_chart(z);
    return interpolate_chart(p.u, p.theta);
}

std::size_t GridFunction::nearest_node(Complex z) const {
    const ChartPoint p = to_chart(z);
    const double a = K_.half_width();
    const double fu = (std::clamp(p.u, -a, a) + a) / radial_step_;
    const std::size_t i = std::min(static_cast<std::size_t>(std::llround(fu)), shape_.n_radial - 1);
    const long long n = static_cast<long long>(shape_.n_angular);
    const long long jj = std::llround((p.theta + kPi) / angular_step());
    const std::size_t j = static_cast<std::size_t>(((jj % n) + n) % n);
    return i * shape_.n_angular + j;
}

double GridFunction::min() const { return min_of(values_); }
double GridFunction::max() const { return max_of(values_); }

TransferPlan::TransferPlan(const MapDescriptor& map, GridShape shape, TransferOptions options)
    : map_(map), shape_(shape) {
    const GridFunction grid(map.domain().K, shape, 0.0);
    const double a = map.domain().K.half_width();
    const double du = grid.radial_step();
    const double dt = grid.angular_step();
    const std::size_t na = shape.n_angular;
    const std::size_t nodes = shape.n_radial * na;

    std::vector<std::vector<Entry>> per_node(nodes);
    std::vector<std::size_t> clamped(nodes, 0);
    std::vector<char> empty(nodes, 0);

#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < shape.n_radial; ++i) {
        for (std::size_t j = 0; j < na; ++j) {
            const std::size_t node = i * na + j;
            const PreimageSet set = preimages_or_empty(map, grid.node(i, j), 0.5 * du);
            if (set.points.empty()) {
                empty[node] = 1;
                continue;
            }
            auto& out = per_node[node];
            out.reserve(set.points.size());
            for (std::size_t p = 0; p < set.points.size(); ++p) {
                ChartPoint x = to_chart(set.points[p]);
                if (std::abs(x.u) > a) {
                    x.u = std::clamp(x.u, -a, a);
                    ++clamped[node];
                }
                const double fu = snap((x.u + a) / du);
                const std::size_t i0 = std::min(static_cast<std::size_t>(fu), shape.n_radial - 2);
                const double wu = std::clamp(fu - static_cast<double>(i0), 0.0, 1.0);
                std::size_t j0 = 0;
                std::size_t j1 = 0;
                double wt = 0.0;
                if (na > 1) {
                    const double ft = snap((x.theta + kPi) / dt);
                    const double fl = std::floor(ft);
                    wt = ft - fl;
                    const long long n = static_cast<long long>(na);
                    const long long jj = static_cast<long long>(fl);
                    j0 = static_cast<std::size_t>(((jj % n) + n) % n);
                    j1 = (j0 + 1) % na;
                }
                out.push_back({static_cast<std::uint32_t>(i0 * na + j0),
                               static_cast<std::uint32_t>(i0 * na + j1), wu, wt,
                               std::log(set.derivatives[p])});
            }
        }
    }

    offsets_.resize(nodes + 1, 0);
    for (std::size_t node = 0; node < nodes; ++node) {
        if (empty[node] && !options.allow_empty) {
            std::ostringstream msg;
            msg << "no preimage of grid node " << node << " lands in K";
            throw EmptyPreimage(msg.str());
        }
        offsets_[node + 1] = offsets_[node] + static_cast<std::uint32_t>(per_node[node].size());
        clamped_ += clamped[node];
    }
    entries_.reserve(offsets_.back());
    for (auto& list : per_node) entries_.insert(entries_.end(), list.begin(), list.end());
}

std::vector<double> TransferPlan::weights(double s) const {
    std::vector<double> w(entries_.size());
    for (std::size_t e = 0; e < entries_.size(); ++e) w[e] = std::exp(-s * entries_[e].log_df);
    return w;
}

void TransferPlan::apply(std::span<const double> weights, std::span<const double> in,
                         std::span<double> out) const {
    const std::size_t na = shape_.n_angular;
    const std::size_t nodes = offsets_.size() - 1;
    const bool floor = true;
    bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
    for (std::size_t node = 0; node < nodes; ++node) {
        double acc = 0.0;
        for (std::uint32_t e = offsets_[node]; e < offsets_[node + 1]; ++e) {
            const Entry& en = entries_[e];
            const double lo = (1.0 - en.wt) * in[en.k00] + en.wt * in[en.k01];
            const double hi = (1.0 - en.wt) * in[en.k00 + na] + en.wt * in[en.k01 + na];
            double v = (1.0 - en.wu) * lo + en.wu * hi;
            if (floor && v > 0.0) v = std::max(v, kPositivityFloor);
            acc += weights[e] * v;
        }
        out[node] = acc;
        finite = finite && std::isfinite(acc);
    }
    if (!finite) throw NumericError("transfer operator produced a non-finite value");
}

GridFunction TransferPlan::apply(double s, const GridFunction& phi) const {
    if (!(phi.shape() == shape_)) throw DomainError("grid shape does not match the plan");
    require_shape(map_, phi);
    GridFunction out(phi.K(), shape_, 0.0);
    apply(weights(s), phi.values(), out.values());
    return out;
}

GridFunction apply_operator(double s, const MapDescriptor& map, const GridFunction& phi,
                            TransferOptions options) {
    return TransferPlan(map, phi.shape(), options).apply(s, phi);
}

const MapDescriptor& map_at(std::span<const MapDescriptor> maps, std::size_t step) {
    if (maps.empty()) throw DomainError("empty map sequence");
    if (maps.size() == 1) return maps.front();
    if (step >= maps.size()) {
        std::ostringstream msg;
        msg << "map sequence of length " << maps.size() << " has no step " << step;
        throw DomainError(msg.str());
    }
    return maps[step];
}

std::vector<double> IterationTrace::log_p() const {
    std::vector<double> out(steps.size());
    double prev = log_anchor0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        out[k] = steps[k].log_anchor - prev;
        prev = steps[k].log_anchor;
    }
    return out;
}

PlanSequence::PlanSequence(std::span<const MapDescriptor> maps, GridShape shape,
                           TransferOptions options)
    : shape_(shape) {
    if (maps.empty()) throw DomainError("empty map sequence");
    index_.reserve(maps.size());
    for (const MapDescriptor& map : maps) {
        std::size_t found = plans_.size();
        for (std::size_t q = 0; q < plans_.size(); ++q) {
            if (plans_[q].map() == map) {
                found = q;
                break;
            }
        }
        if (found == plans_.size()) plans_.emplace_back(map, shape, options);
        index_.push_back(found);
    }
}

std::size_t PlanSequence::plan_index(std::size_t step) const {
    if (index_.size() == 1) return index_.front();
    if (step >= index_.size()) {
        std::ostringstream msg;
        msg << "map sequence of length " << index_.size() << " has no step " << step;
        throw DomainError(msg.str());
    }
    return index_[step];
}

std::size_t PlanSequence::entries() const noexcept {
    std::size_t total = 0;
    for (const auto& plan : plans_) total += plan.entries();
    return total;
}

const TransferPlan& PlanSequence::at(std::size_t step) const { return plans_[plan_index(step)]; }

IterationTrace iterate_sequence(double s, const PlanSequence& plans, std::size_t n,
                                const GridFunction& phi0, std::optional<std::size_t> anchor) {
    if (n == 0) throw DomainError("iterate_sequence: n must be >= 1");
    if (!(phi0.shape() == plans.shape())) throw DomainError("grid shape does not match the plans");
    require_shape(plans.at(0).map(), phi0);
    if (plans.length() > 1 && n > plans.length()) {
        throw DomainError("iterate_sequence: map sequence shorter than n");
    }
    if (!(phi0.min() > 0.0)) throw DomainError("iterate_sequence: phi0 must be positive");

    IterationTrace trace{phi0, 0.0, 0.0, anchor.value_or(default_anchor(phi0)), {}};
    if (trace.anchor >= phi0.size()) throw DomainError("anchor node out of range");
    const double m0 = phi0.max();
    for (double& v : trace.field.values()) v /= m0;
    trace.log_scale = std::log(m0);
    trace.log_anchor0 = std::log(phi0.values()[trace.anchor]);

    std::vector<std::vector<double>> weights(plans.distinct());
    for (std::size_t q = 0; q < plans.distinct(); ++q) weights[q] = plans.plan(q).weights(s);

    std::vector<double> next(phi0.size());
    trace.steps.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t q = plans.plan_index(k);
        const TransferPlan& plan = plans.plan(q);
        plan.apply(weights[q], trace.field.values(), next);
        const double mx = max_of(next);
        if (!(mx > 0.0)) throw NumericError("iterate_sequence: iterate vanished identically");
        for (std::size_t i = 0; i < next.size(); ++i) trace.field.values()[i] = next[i] / mx;
        trace.log_scale += std::log(mx);
        StepRecord rec;
        rec.log_M = trace.log_scale;
        rec.log_m = trace.log_scale + std::log(trace.field.min());
        rec.log_anchor = trace.log_scale + std::log(trace.field.values()[trace.anchor]);
        rec.clamped = plan.clamped_points();
        trace.steps.push_back(rec);
    }
    return trace;
}

IterationTrace iterate_sequence(double s, std::span<const MapDescriptor> maps, std::size_t n,
                                const GridFunction& phi0, IterationOptions options) {
    if (maps.size() > 1 && n > maps.size()) {
        throw DomainError("iterate_sequence: map sequence shorter than n");
    }
    const auto used = maps.size() > 1 ? maps.first(n) : maps;
    const PlanSequence plans(used, phi0.shape(), options.transfer);
    return iterate_sequence(s, plans, n, phi0, options.anchor);
}

namespace {

PressureEstimate bracket_from_trace(double s, std::size_t n, const IterationTrace& trace) {
    PressureEstimate est;
    est.s = s;
    est.n = n;
    const StepRecord& last = trace.steps.back();
    est.lower = last.log_m / static_cast<double>(n);
    est.upper = last.log_M / static_cast<double>(n);
    est.cocycle = (last.log_anchor - trace.log_anchor0) / static_cast<double>(n);
    est.clamped_points = last.clamped;
    est.negative_s = s < 0.0;
    return est;
}

}  // namespace

PressureEstimate pressure_bracket(double s, std::span<const MapDescriptor> maps, std::size_t n,
                                  GridShape grid, TransferOptions options) {
    const GridFunction one(map_at(maps, 0).domain().K, grid, 1.0);
    return bracket_from_trace(s, n, iterate_sequence(s, maps, n, one, {options, std::nullopt}));
}

PressureEstimate pressure_bracket(double s, const PlanSequence& plans, std::size_t n) {
    const GridFunction one(plans.K(), plans.shape(), 1.0);
    return bracket_from_trace(s, n, iterate_sequence(s, plans, n, one));
}

namespace {

template <typename PlanFor>
std::vector<PressureEstimate> run_cocycles(std::span<const double> s, const HyperbolicAnnulus& K,
                                           GridShape grid, std::size_t steps,
                                           std::size_t burn_in, PlanFor&& plan_for) {
    if (s.empty()) throw DomainError("cocycle_pressures: no s values");
    if (steps == 0 || burn_in >= steps) {
        throw DomainError("cocycle_pressures: burn-in consumes the whole run");
    }
    const GridFunction one(K, grid, 1.0);
    const std::size_t anchor = default_anchor(one);
    const std::size_t ns = s.size();
    std::vector<std::vector<double>> fields(ns, std::vector<double>(one.size(), 1.0));
    std::vector<double> log_scale(ns, 0.0);
    std::vector<double> tail_sum(ns, 0.0);
    std::vector<double> next(one.size());
    std::vector<PressureEstimate> out(ns);

    for (std::size_t k = 0; k < steps; ++k) {
        const TransferPlan& plan = plan_for(k);
        for (std::size_t q = 0; q < ns; ++q) {
            plan.apply(plan.weights(s[q]), fields[q], next);
            const double p = next[anchor];
            if (!(p > 0.0) || !std::isfinite(p)) {
                throw NumericError("cocycle_pressures: anchor value underflowed");
            }
            for (std::size_t i = 0; i < next.size(); ++i) fields[q][i] = next[i] / p;
            const double lp = std::log(p);
            log_scale[q] += lp;
            if (k >= burn_in) tail_sum[q] += lp;
            out[q].clamped_points = std::max(out[q].clamped_points, plan.clamped_points());
        }
    }
    for (std::size_t q = 0; q < ns; ++q) {
        PressureEstimate& est = out[q];
        est.s = s[q];
        est.n = steps;
        est.lower = (log_scale[q] + std::log(min_of(fields[q]))) / static_cast<double>(steps);
        est.upper = (log_scale[q] + std::log(max_of(fields[q]))) / static_cast<double>(steps);
        est.cocycle = tail_sum[q] / static_cast<double>(steps - burn_in);
        est.negative_s = s[q] < 0.0;
    }
    return out;
}

}  // namespace

std::vector<PressureEstimate> cocycle_pressures(std::span<const double> s,
                                                std::span<const MapDescriptor> maps,
                                                std::size_t steps, GridShape grid,
                                                std::size_t burn_in) {
    if (maps.size() > 1 && steps > maps.size()) {
        throw DomainError("cocycle_pressures: map sequence shorter than the run");
    }
    std::unique_ptr<TransferPlan> plan;
    return run_cocycles(s, map_at(maps, 0).domain().K, grid, steps, burn_in,
                        [&](std::size_t k) -> const TransferPlan& {
                            const MapDescriptor& map = map_at(maps, k);
                            if (!plan || !(plan->map() == map)) {
                                plan = std::make_unique<TransferPlan>(map, grid);
                            }
                            return *plan;
                        });
}

std::vector<PressureEstimate> cocycle_pressures(std::span<const double> s, const PlanSequence& plans,
                                                std::size_t steps, std::size_t burn_in) {
    if (plans.length() > 1 && steps > plans.length()) {
        throw DomainError("cocycle_pressures: map sequence shorter than the run");
    }
    return run_cocycles(s, plans.K(), plans.shape(), steps, burn_in,
                        [&](std::size_t k) -> const TransferPlan& { return plans.at(k); });
}

NormalizedRun normalized_iterate(double s, std::span<const MapDescriptor> maps, std::size_t steps,
                                 const GridFunction& phi0, std::optional<std::size_t> anchor) {
    if (steps == 0) throw DomainError("normalized_iterate: steps must be >= 1");
    require_shape(map_at(maps, 0), phi0);
    if (!(phi0.min() > 0.0)) throw DomainError("normalized_iterate: phi0 must be positive");
    NormalizedRun run{phi0, {}, {}, {}, anchor.value_or(default_anchor(phi0))};
    if (run.anchor >= phi0.size()) throw DomainError("anchor node out of range");
    {
        const double a0 = phi0.values()[run.anchor];
        for (double& v : run.h.values()) v /= a0;
    }
    Stepper stepper(maps, phi0.shape(), s, {});
    std::vector<double> next(phi0.size());
    double log_scale = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t clamped = stepper.step(k, run.h.values(), next);
        const double p = next[run.anchor];
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw NumericError("normalized_iterate: anchor value underflowed");
        }
        double diff = 0.0;
        double mn = std::numeric_limits<double>::infinity();
        double mx = 0.0;
        auto h = run.h.values();
        for (std::size_t q = 0; q < next.size(); ++q) {
            const double v = next[q] / p;
            diff = std::max(diff, std::abs(v - h[q]));
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            h[q] = v;
        }
        log_scale += std::log(p);
        run.log_p.push_back(std::log(p));
        run.successive.push_back(diff);
        run.steps.push_back({log_scale + std::log(mn), log_scale + std::log(mx), log_scale, clamped});
    }
    return run;
}

double cocycle_mean(std::span<const double> log_p, std::size_t burn_in) {
    if (burn_in >= log_p.size()) throw DomainError("cocycle_mean: burn-in consumes the whole run");
    double sum = 0.0;
    for (std::size_t k = burn_in; k < log_p.size(); ++k) sum += log_p[k];
    return sum / static_cast<double>(log_p.size() - burn_in);
}

ContractionFit contraction_rate(double s, std::span<const MapDescriptor> maps, std::size_t trials,
                                std::size_t steps, GridShape grid, std::uint64_t seed) {
    if (trials < 2) throw DomainError("contraction_rate: need at least 2 trials");
    constexpr double kFloor = 1e-12;
    const HyperbolicAnnulus& K = map_at(maps, 0).domain().K;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t t = 0; t < trials; ++t) {
        GridFunction a(K, grid);
        GridFunction b(K, grid);
        for (double& v : a.values()) v = unif(rng);
        for (double& v : b.values()) v = unif(rng);
        const std::size_t anchor = default_anchor(a);
        Stepper sa(maps, grid, s, {});
        Stepper sb(maps, grid, s, {});
        std::vector<double> na(a.size());
        std::vector<double> nb(b.size());
        for (std::size_t k = 0; k < steps; ++k) {
            sa.step(k, a.values(), na);
            sb.step(k, b.values(), nb);
            const double pa = na[anchor];
            const double pb = nb[anchor];
            double diff = 0.0;
            for (std::size_t q = 0; q < na.size(); ++q) {
                a.values()[q] = na[q] / pa;
                b.values()[q] = nb[q] / pb;
                diff = std::max(diff, std::abs(a.values()[q] - b.values()[q]));
            }
            if (!(diff > kFloor)) break;
            xs.push_back(static_cast<double>(k + 1));
            ys.push_back(std::log(diff));
        }
    }

    ContractionFit fit;
    fit.points = xs.size();
    const double x0 = xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end());
    const double x1 = xs.empty() ? 0.0 : *std::max_element(xs.begin(), xs.end());
    if (xs.size() < 2 || x0 == x1) {
        // Differences collapsed below round-off within a step.
        fit.eta = 0.0;
        return fit;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.eta = std::exp(sxy / sxx);
    if (!(fit.eta < 1.0)) {
        std::ostringstream msg;
        msg << "fitted contraction rate " << fit.eta << " is not below 1";
        throw ContractionError(msg.str());
    }
    return fit;
}

std::size_t mixing_depth(const DomainConstants& constants, double beta) {
    if (!(beta > 1.0)) throw DomainError("mixing_depth: beta must exceed 1");
    const double ratio = 2.0 * constants.diam_K / constants.delta_big;
    if (ratio <= 1.0) return 0;
    return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(beta) - 1e-12));
}

MixingCheck check_mixing_bound(const IterationTrace& trace, std::size_t n, std::size_t n0,
                               double s, double sup_derivative, double c_n) {
    if (n == 0 || n + n0 > trace.steps.size()) {
        throw DomainError("check_mixing_bound: trace too short for n + n0 steps");
    }
    MixingCheck check;
    check.lhs_log = trace.steps[n + n0 - 1].log_m;
    check.rhs_log = -s * (static_cast<double>(n0) * std::log(sup_derivative) + std::log(c_n)) +
                    trace.steps[n - 1].log_M - std::log(2.0);
    check.holds = check.lhs_log >= check.rhs_log;
    return check;
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
    out << "step,m_k_log,M_k_log,log_p_k,clamped_points\n";
    const std::vector<double> lp = trace.log_p();
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const StepRecord& r = trace.steps[k];
        out << (k + 1) << ',' << r.log_m << ',' << r.log_M << ',' << lp[k] << ',' << r.clamped << '\n';
    }
}

}  // namespace hdim
