#include "hdim/ensemble.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr int kPoissonCap = 200;
constexpr double kMonotoneSlack = 1e-9;
const SampleGrid kValidationGrid{24, 48};

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void validate_map(const MapDescriptor& map, std::size_t index) {
    const DerivativeRange range = derivative_range(map, kValidationGrid);
    std::ostringstream msg;
    if (range.min_local_degree != map.degree() || range.max_local_degree != map.degree()) {
        msg << "map " << index << " (degree " << map.degree()
            << ") does not pull K back into K; lower k or shrink |a| + r";
        throw ValidationError(msg.str());
    }
    if (!(range.inf > 1.0)) {
        msg << "map " << index << " is not expanding on K (inf Df = " << range.inf << ")";
        throw ValidationError(msg.str());
    }
    if (!degree_area_check(map.degree(), range.sup)) {
        msg << "map " << index << " violates degree <= ||Df||^2";
        throw ValidationError(msg.str());
    }
}

// One bisection per curve, all advanced together so every pass walks the
// sequence once.
struct Bisection {
    double lo, hi, f_lo, f_hi;
};

void update(Bisection& b, double mid, double fm, const char* curve) {
    const double slack = kMonotoneSlack * (1.0 + std::abs(fm));
    if (!(fm <= b.f_lo + slack && fm >= b.f_hi - slack)) {
        std::ostringstream msg;
        msg << curve << " pressure is not decreasing near s = " << mid;
        throw MonotonicityError(msg.str());
    }
    if (fm > 0.0) {
        b.lo = mid;
        b.f_lo = fm;
    } else {
        b.hi = mid;
        b.f_hi = fm;
    }
}

double field(const PressureEstimate& e, int curve) {
    if (curve == 0) return *e.cocycle;
    return curve == 1 ? e.lower : e.upper;
}

const char* curve_name(int curve) {
    static const std::array<const char*, 3> names{"cocycle", "lower", "upper"};
    return names[static_cast<std::size_t>(curve)];
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void require_options(const RandomOptions& options, const EnsembleSpec& spec) {
    if (!(options.tol > 0.0)) throw DomainError("random: tol must be positive");
    if (!(options.s_min < options.s_max)) throw DomainError("random: empty s range");
    if (options.burn_in >= spec.seq_len) {
        throw ConfigError("seq_len must exceed the burn-in of " + std::to_string(options.burn_in));
    }
    if (spec.replicas == 0) throw ConfigError("replicas must be >= 1");
}

}  // namespace

void EnsembleSpec::validate() const {
    std::ostringstream msg;
    if (!(r >= 0.0)) msg << "r must be >= 0 (got " << r << ")";
    else if (!(lambda >= 0.0)) msg << "lambda must be >= 0 (got " << lambda << ")";
    else if (lambda > 30.0) msg << "lambda above 30 is outside the supported range";
    else if (!(k > 0.0 && k < 1.0)) msg << "k must lie in (0,1) (got " << k << ")";
    else if (!(std::abs(a) + r < k * k / 4.0)) {
        msg << "|a| + r = " << std::abs(a) + r << " must be below k^2/4 = " << k * k / 4.0;
    } else if (seq_len == 0) msg << "seq_len must be >= 1";
    const std::string text = msg.str();
    if (!text.empty()) throw ConfigError(text);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                       std::uint64_t lane) {
    std::uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ stream);
    x = splitmix64(x ^ index);
    x = splitmix64(x ^ lane);
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

int poisson_inverse(double lambda, double u) {
    if (lambda < 0.0) throw DomainError("poisson_inverse: negative lambda");
    double p = std::exp(-lambda);
    double cdf = p;
    int n = 0;
    while (u >= cdf && n < kPoissonCap) {
        ++n;
        p *= lambda / n;
        cdf += p;
    }
    return n;
}

std::vector<MapDraw> sample_draws(const EnsembleSpec& spec, std::size_t replica) {
    spec.validate();
    std::vector<MapDraw> draws(spec.seq_len);
    for (std::size_t i = 0; i < spec.seq_len; ++i) {
        const double un = counter_uniform(spec.seed, replica, i, 0);
        const double ur = counter_uniform(spec.seed, replica, i, 1);
        const double ut = counter_uniform(spec.seed, replica, i, 2);
        draws[i].N = poisson_inverse(spec.lambda, un);
        draws[i].c = spec.a + std::polar(spec.r * std::sqrt(ur), kTwoPi * ut);
    }
    return draws;
}

std::vector<MapDescriptor> sample_sequence(const EnsembleSpec& spec, std::size_t replica) {
    const Domain domain = spec.domain();
    const std::vector<MapDraw> draws = sample_draws(spec, replica);
    std::vector<MapDescriptor> maps;
    maps.reserve(draws.size());
    std::map<std::pair<int, std::pair<double, double>>, bool> checked;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        maps.push_back(MapDescriptor::power_plus_c(draws[i].N, draws[i].c, domain));
        const auto key = std::make_pair(draws[i].N, std::make_pair(draws[i].c.real(), draws[i].c.imag()));
        if (checked.emplace(key, true).second) validate_map(maps.back(), i);
    }
    return maps;
}

ReplicaRoot replica_dimension(const EnsembleSpec& spec, std::size_t replica,
                              const RandomOptions& options) {
    require_options(options, spec);
    const std::vector<MapDescriptor> maps = sample_sequence(spec, replica);
    const std::size_t steps = spec.seq_len;

    const double nodes = static_cast<double>(options.grid.n_radial * options.grid.n_angular);
    const double bytes = static_cast<double>(steps) * nodes * (3.0 + spec.lambda) * 32.0;
    std::optional<PlanSequence> plans;
    if (bytes <= static_cast<double>(options.plan_cache_bytes)) plans.emplace(maps, options.grid);
    auto evaluate = [&](const std::vector<double>& s) {
        return plans ? cocycle_pressures(s, *plans, steps, options.burn_in)
                     : cocycle_pressures(s, maps, steps, options.grid, options.burn_in);
    };

    const std::vector<PressureEstimate> ends = evaluate({options.s_min, options.s_max});
    std::array<Bisection, 3> b{};
    for (int c = 0; c < 3; ++c) {
        b[c] = {options.s_min, options.s_max, field(ends[0], c), field(ends[1], c)};
        if (!(b[c].f_lo >= 0.0 && b[c].f_hi <= 0.0 && b[c].f_lo > b[c].f_hi)) {
            std::ostringstream msg;
            msg << curve_name(c) << " pressure has no sign change on [" << options.s_min << ", "
                << options.s_max << "]";
            throw NoSignChange(msg.str());
        }
    }
    ReplicaRoot root;
    root.clamped_points = std::max(ends[0].clamped_points, ends[1].clamped_points);
    for (std::size_t pass = 0;; ++pass) {
        std::vector<double> mids;
        for (const Bisection& x : b) {
            if (x.hi - x.lo > options.tol) mids.push_back(0.5 * (x.lo + x.hi));
        }
        if (mids.empty()) break;
        if (pass == options.max_iter) throw ConvergenceError("random bisection did not converge");
        std::sort(mids.begin(), mids.end());
        mids.erase(std::unique(mids.begin(), mids.end()), mids.end());
        const std::vector<PressureEstimate> values = evaluate(mids);
        for (int c = 0; c < 3; ++c) {
            if (b[c].hi - b[c].lo <= options.tol) continue;
            const double mid = 0.5 * (b[c].lo + b[c].hi);
            const auto it = std::find(mids.begin(), mids.end(), mid);
            const PressureEstimate& e = values[static_cast<std::size_t>(it - mids.begin())];
            update(b[c], mid, field(e, c), curve_name(c));
            root.clamped_points = std::max(root.clamped_points, e.clamped_points);
        }
    }
    root.s_crit = 0.5 * (b[0].lo + b[0].hi);
    root.s_lower = b[1].lo;
    root.s_upper = b[2].hi;
    const PressureEstimate at = evaluate({root.s_crit}).front();
    root.bracket_width = at.width();
    return root;
}

PressureEstimate random_pressure(const EnsembleSpec& spec, double s, RandomOptions options) {
    require_options(options, spec);
    std::vector<double> cocycles;
    std::vector<double> lowers;
    std::vector<double> uppers;
    std::size_t clamped = 0;
    for (std::size_t rep = 0; rep < spec.replicas; ++rep) {
        const std::vector<MapDescriptor> maps = sample_sequence(spec, rep);
        const std::array<double, 1> one{s};
        const PressureEstimate e =
            cocycle_pressures(one, maps, spec.seq_len, options.grid, options.burn_in).front();
        cocycles.push_back(*e.cocycle);
        lowers.push_back(e.lower);
        uppers.push_back(e.upper);
        clamped = std::max(clamped, e.clamped_points);
    }
    PressureEstimate out;
    out.s = s;
    out.n = spec.seq_len;
    out.cocycle = mean(cocycles);
    out.std_error = standard_error(cocycles);
    out.lower = mean(lowers);
    out.upper = mean(uppers);
    out.clamped_points = clamped;
    out.negative_s = s < 0.0;
    return out;
}

DimensionResult random_dimension(const EnsembleSpec& spec, RandomOptions options) {
    spec.validate();
    std::vector<double> roots;
    DimensionResult result;
    result.s_lower = options.s_max;
    result.s_upper = options.s_min;
    double width = 0.0;
    for (std::size_t rep = 0; rep < spec.replicas; ++rep) {
        const ReplicaRoot r = replica_dimension(spec, rep, options);
        roots.push_back(r.s_crit);
        result.s_lower = std::min(result.s_lower, r.s_lower);
        result.s_upper = std::max(result.s_upper, r.s_upper);
        width = std::max(width, r.bracket_width);
        result.diagnostics.clamped_points = std::max(result.diagnostics.clamped_points, r.clamped_points);
    }
    result.s_crit = mean(roots);
    result.n_used = spec.seq_len;
    result.grid = options.grid;
    result.diagnostics.bracket_width_at_root = width;
    result.diagnostics.std_error = standard_error(roots);
    return result;
}

DimensionBounds ensemble_bounds(const EnsembleSpec& spec, SampleGrid grid) {
    const std::vector<MapDescriptor> maps = sample_sequence(spec, 0);
    return dimension_bounds(ensemble_statistics(maps, grid));
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::a_modulus: return "a_modulus";
        case SweepAxis::r: return "r";
        case SweepAxis::lambda: return "lambda";
    }
    return "lambda";
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "a_modulus") return SweepAxis::a_modulus;
    if (name == "r") return SweepAxis::r;
    if (name == "lambda") return SweepAxis::lambda;
    throw ConfigError("unknown sweep axis '" + name + "' (expected a_modulus, r or lambda)");
}

SweepResult parameter_sweep(const EnsembleSpec& base, SweepAxis axis,
                            const std::vector<double>& values, RandomOptions options) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    std::vector<EnsembleSpec> specs;
    for (double v : sorted) {
        EnsembleSpec spec = base;
        switch (axis) {
            case SweepAxis::a_modulus: {
                const double m = std::abs(base.a);
                spec.a = m > 0.0 ? base.a * (v / m) : Complex{v, 0.0};
                break;
            }
            case SweepAxis::r: spec.r = v; break;
            case SweepAxis::lambda: spec.lambda = v; break;
        }
        spec.validate();
        specs.push_back(spec);
    }

    SweepResult result;
    result.axis = axis;
    double se2 = 0.0;
    std::vector<double> ds;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const DimensionResult d = random_dimension(specs[i], options);
        SweepSample sample;
        sample.value = sorted[i];
        sample.d = d.s_crit;
        sample.std_error = d.diagnostics.std_error.value_or(0.0);
        sample.bracket_width = d.diagnostics.bracket_width_at_root;
        sample.s_lower = d.s_lower;
        sample.s_upper = d.s_upper;
        result.samples.push_back(sample);
        se2 += sample.std_error * sample.std_error;
        ds.push_back(sample.d);
    }
    result.pooled_std_error = std::sqrt(se2 / static_cast<double>(specs.size()));
    result.fit_residual = polynomial_fit_residual(sorted, ds, 3);
    return result;
}

double polynomial_fit_residual(const std::vector<double>& x, const std::vector<double>& y,
                               int degree) {
    if (x.size() != y.size() || x.empty()) throw DomainError("polynomial fit: size mismatch");
    const int deg = std::min<int>(degree, static_cast<int>(x.size()) - 1);
    // Centre and scale the abscissae to keep the Vandermonde system tame.
    const double lo = *std::min_element(x.begin(), x.end());
    const double hi = *std::max_element(x.begin(), x.end());
    const double mid = 0.5 * (lo + hi);
    const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
    Eigen::MatrixXd V(static_cast<Eigen::Index>(x.size()), deg + 1);
    Eigen::VectorXd Y(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = (x[i] - mid) / half;
        double p = 1.0;
        for (int j = 0; j <= deg; ++j) {
            V(static_cast<Eigen::Index>(i), j) = p;
            p *= t;
        }
        Y(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(Y);
    return (V * coef - Y).cwiseAbs().maxCoeff();
}

}  // namespace hdim
