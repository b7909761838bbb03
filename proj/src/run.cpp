#include "hdim/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "hdim/boxcount.hpp"
#include "hdim/components.hpp"
#include "hdim/ensemble.hpp"
#include "hdim/errors.hpp"
#include "hdim/solver.hpp"

#ifndef HDIM_VERSION
#define HDIM_VERSION "0.0.0"
#endif

namespace hdim {

namespace {

using Json = nlohmann::ordered_json;

// Non-finite values become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
Json num(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }

std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

bool synthetic(const RunConfig& cfg) { return cfg.map.family == "linear_ifs" || cfg.map.family == "uniform_cantor"; }

GridShape grid_for(const RunConfig& cfg) {
    if (cfg.numeric.grid) return *cfg.numeric.grid;
    switch (cfg.subcommand) {
        case Subcommand::random_dim:
        case Subcommand::sweep: return {64, 128};
        case Subcommand::components: return synthetic(cfg) ? GridShape{256, 1} : GridShape{128, 128};
        default: return synthetic(cfg) ? GridShape{256, 1} : GridShape{256, 256};
    }
}

double tol_for(const RunConfig& cfg) {
    if (cfg.numeric.tol) return *cfg.numeric.tol;
    return cfg.subcommand == Subcommand::random_dim || cfg.subcommand == Subcommand::sweep ? 1e-4 : 1e-6;
}

// A periodic sequence repeated to `length` steps; a single map stays stationary.
std::vector<MapDescriptor> expand(const std::vector<MapDescriptor>& period, std::size_t length) {
    if (period.size() == 1) return period;
    std::vector<MapDescriptor> out;
    out.reserve(length);
    for (std::size_t k = 0; k < length; ++k) out.push_back(period[k % period.size()]);
    return out;
}

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    o.s_min = cfg.numeric.s_min;
    o.s_max = cfg.numeric.s_max;
    o.tol = tol_for(cfg);
    o.max_iter = cfg.numeric.max_iter;
    o.grid = grid_for(cfg);
    return o;
}

RandomOptions random_options(const RunConfig& cfg) {
    RandomOptions o;
    o.grid = grid_for(cfg);
    o.burn_in = cfg.numeric.burn_in;
    o.s_min = cfg.numeric.s_min;
    o.s_max = cfg.numeric.s_max;
    o.tol = tol_for(cfg);
    o.max_iter = cfg.numeric.max_iter;
    return o;
}

Json grid_json(GridShape g) { return Json::array({g.n_radial, g.n_angular}); }

Json config_json(const RunConfig& cfg) {
    Json c;
    c["subcommand"] = to_string(cfg.subcommand);
    const bool random = cfg.subcommand == Subcommand::random_dim || cfg.subcommand == Subcommand::sweep;
    if (!random) {
        Json m;
        m["family"] = cfg.map.family;
        if (cfg.map.family == "power_plus_c") {
            m["N"] = cfg.map.N;
            m["c_re"] = cfg.map.c.real();
            m["c_im"] = cfg.map.c.imag();
        } else if (cfg.map.family == "circle_power") {
            m["d"] = cfg.map.d;
        } else if (cfg.map.family == "uniform_cantor") {
            m["cantor_branches"] = cfg.map.cantor_branches;
            m["cantor_ratio"] = cfg.map.cantor_ratio;
        } else {
            Json seq = Json::array();
            for (const auto& branches : cfg.map.branches) {
                Json bs = Json::array();
                for (const IfsBranch& b : branches) {
                    bs.push_back(Json::array({b.ratio, b.translation, b.target_lo, b.target_hi}));
                }
                seq.push_back(bs);
            }
            m["branches"] = seq;
        }
        c["map"] = m;
    }
    const Domain dom = random ? cfg.ensemble.domain() : cfg.resolved_domain();
    c["domain"] = {{"rho_U", dom.U.rho()}, {"rho_K", dom.K.rho()}};
    const NumericConfig& n = cfg.numeric;
    Json nj;
    nj["grid_shape"] = grid_json(grid_for(cfg));
    nj["n"] = n.n;
    if (n.s) nj["s"] = *n.s;
    nj["s_min"] = n.s_min;
    nj["s_max"] = n.s_max;
    nj["tol"] = tol_for(cfg);
    nj["max_iter"] = n.max_iter;
    nj["method"] = n.method;
    nj["burn_in"] = n.burn_in;
    if (cfg.subcommand == Subcommand::boxdim || cfg.subcommand == Subcommand::components) {
        nj["depth"] = n.depth;
        nj["r_min"] = n.r_min;
        nj["cap"] = n.cap;
        nj["radii"] = n.radii;
        nj["radii_top"] = num(n.radii_top);
        nj["radii_count"] = n.radii_count;
        nj["radii_decades"] = n.radii_decades;
        nj["delta"] = num(n.delta);
        nj["bases"] = n.bases;
    }
    c["numeric"] = nj;
    if (random) {
        const EnsembleSpec& e = cfg.ensemble;
        c["ensemble"] = {{"a_re", e.a.real()}, {"a_im", e.a.imag()}, {"r", e.r},         {"lambda", e.lambda},
                         {"k", e.k},           {"seq_len", e.seq_len}, {"seed", e.seed}, {"replicas", e.replicas}};
    }
    if (cfg.subcommand == Subcommand::sweep) {
        c["sweep"] = {{"axis", to_string(cfg.sweep.axis)}, {"values", cfg.sweep.values}};
    }
    c["output"] = {{"format", cfg.output.format == OutputFormat::json ? "json" : "csv"}};
    return c;
}

// A result as JSON plus its CSV rendering (header row first).
struct Payload {
    Json json;
    std::vector<std::vector<std::string>> rows;
};

Payload run_pressure(const RunConfig& cfg) {
    const std::vector<MapDescriptor> maps = expand(cfg.maps(), cfg.numeric.n);
    const GridShape grid = grid_for(cfg);
    const double s = *cfg.numeric.s;
    const PressureEstimate p = pressure_bracket(s, maps, cfg.numeric.n, grid);
    const IterationTrace trace =
        iterate_sequence(s, maps, cfg.numeric.n, GridFunction(maps.front().domain().K, grid, 1.0));
    const std::vector<double> log_p = trace.log_p();
    Payload out;
    out.json = {{"s", p.s},
                {"n", p.n},
                {"lower", num(p.lower)},
                {"upper", num(p.upper)},
                {"width", num(p.width())},
                {"clamped_points", p.clamped_points},
                {"negative_s", p.negative_s}};
    Json steps = Json::array();
    out.rows.push_back({"step", "m_k_log", "M_k_log", "log_p_k", "clamped_points"});
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const StepRecord& r = trace.steps[k];
        steps.push_back({{"step", k + 1},
                         {"m_k_log", num(r.log_m)},
                         {"M_k_log", num(r.log_M)},
                         {"log_p_k", num(log_p[k])},
                         {"clamped_points", r.clamped}});
        out.rows.push_back({std::to_string(k + 1), csv_number(r.log_m), csv_number(r.log_M), csv_number(log_p[k]),
                            std::to_string(r.clamped)});
    }
    out.json["trace"] = steps;
    return out;
}

Json diagnostics_json(const DimensionDiagnostics& d) {
    return {{"bracket_width_at_root", num(d.bracket_width_at_root)},
            {"eta_fit", num(d.eta_fit)},
            {"clamped_points", d.clamped_points},
            {"std_error", num(d.std_error)}};
}

Payload dimension_payload(const DimensionResult& r) {
    Payload out;
    out.json = {{"s_crit", num(r.s_crit)},
                {"s_lower", num(r.s_lower)},
                {"s_upper", num(r.s_upper)},
                {"n", r.n_used},
                {"grid", grid_json(r.grid)},
                {"diagnostics", diagnostics_json(r.diagnostics)}};
    out.rows = {{"s_crit", "s_lower", "s_upper", "n", "grid", "bracket_width_at_root", "clamped_points"},
                {csv_number(r.s_crit), csv_number(r.s_lower), csv_number(r.s_upper), std::to_string(r.n_used),
                 std::to_string(r.grid.n_radial) + "x" + std::to_string(r.grid.n_angular),
                 csv_number(r.diagnostics.bracket_width_at_root), std::to_string(r.diagnostics.clamped_points)}};
    return out;
}

Payload run_dimension(const RunConfig& cfg) {
    const std::size_t n = cfg.numeric.n;
    const std::vector<MapDescriptor> maps = expand(cfg.maps(), n);
    const SolverOptions options = solver_options(cfg);
    if (cfg.numeric.method == "exponents") {
        const CriticalExponents e = critical_exponents(maps, n, options);
        DimensionResult r;
        r.s_lower = e.lower;
        r.s_upper = e.upper;
        r.s_crit = 0.5 * (e.lower + e.upper);
        r.n_used = n;
        r.grid = options.grid;
        r.diagnostics.bracket_width_at_root = e.upper - e.lower;
        return dimension_payload(r);
    }
    return dimension_payload(solve_dimension(maps, n, options));
}

Payload run_random(const RunConfig& cfg) {
    const DimensionResult r = random_dimension(cfg.ensemble, random_options(cfg));
    Payload out = dimension_payload(r);
    try {
        const DimensionBounds b = ensemble_bounds(cfg.ensemble);
        out.json["bounds"] = {{"lower", num(b.lower)}, {"upper", num(b.upper)}, {"contains", b.contains(r.s_crit)}};
    } catch (const DegenerateBound& e) {
        out.json["bounds"] = nullptr;
    }
    out.rows = {{"axis_value", "d", "std_err", "s_lower", "s_upper"},
                {csv_number(cfg.ensemble.lambda), csv_number(r.s_crit), csv_number(r.diagnostics.std_error.value_or(0.0)),
                 csv_number(r.s_lower), csv_number(r.s_upper)}};
    return out;
}

Payload run_sweep(const RunConfig& cfg) {
    const SweepResult r = parameter_sweep(cfg.ensemble, cfg.sweep.axis, cfg.sweep.values, random_options(cfg));
    Payload out;
    Json samples = Json::array();
    out.rows.push_back({"axis_value", "d", "std_err", "s_lower", "s_upper"});
    for (const SweepSample& s : r.samples) {
        samples.push_back({{"axis_value", s.value},
                           {"d", num(s.d)},
                           {"std_err", num(s.std_error)},
                           {"s_lower", num(s.s_lower)},
                           {"s_upper", num(s.s_upper)},
                           {"bracket_width", num(s.bracket_width)}});
        out.rows.push_back({csv_number(s.value), csv_number(s.d), csv_number(s.std_error), csv_number(s.s_lower),
                            csv_number(s.s_upper)});
    }
    out.json = {{"axis", to_string(r.axis)},
                {"samples", samples},
                {"fit_residual", num(r.fit_residual)},
                {"pooled_std_error", num(r.pooled_std_error)}};
    return out;
}

PointCloud cloud_for(const RunConfig& cfg, const std::vector<MapDescriptor>& period) {
    const Domain& dom = period.front().domain();
    std::vector<Complex> bases;
    if (synthetic(cfg)) {
        const std::vector<double> ts = cfg.numeric.bases.empty() ? std::vector<double>{0.5} : cfg.numeric.bases;
        for (double t : ts) bases.push_back(std::exp(Complex(ifs_log_modulus(dom.K, t), 0.0)));
    } else {
        bases.push_back(Complex(1.0, 0.0));
    }
    std::size_t depth = cfg.numeric.depth;
    if (depth == 0) {
        // Inverse branches contract by at least max(beta, inf Df).
        DomainConstants k = domain_constants(dom.U, dom.K);
        for (const MapDescriptor& m : period) k.beta = std::max(k.beta, derivative_range(m).inf);
        depth = orbit_depth(k, cfg.numeric.r_min);
    }
    const std::vector<MapDescriptor> maps = expand(period, depth);
    return backward_orbit(maps, bases, depth, cfg.numeric.cap);
}

Payload run_boxdim(const RunConfig& cfg) {
    const PointCloud cloud = cloud_for(cfg, cfg.maps());
    std::vector<double> radii = cfg.numeric.radii;
    if (radii.empty()) {
        radii = cfg.numeric.radii_top
                    ? log_radii(*cfg.numeric.radii_top, cfg.numeric.radii_count, cfg.numeric.radii_decades)
                    : default_radii(chart_diameter(chart_points(cloud)), cfg.numeric.radii_count,
                                    cfg.numeric.radii_decades);
    }
    const BoxCount b = box_dimension(cloud, radii);
    Payload out;
    out.json = {{"slope", num(b.slope)},
                {"upper_box", num(b.max_pair_slope)},
                {"lower_box", num(b.min_pair_slope)},
                {"points", cloud.points.size()},
                {"depth", cloud.depth},
                {"capped", cloud.capped},
                {"r", b.radii},
                {"N_r", b.counts},
                {"running_slope", b.running_slope}};
    out.rows.push_back({"r", "N_r", "running_slope"});
    for (std::size_t i = 0; i < b.radii.size(); ++i) {
        out.rows.push_back({csv_number(b.radii[i]), csv_number(b.counts[i]), csv_number(b.running_slope[i])});
    }
    return out;
}

Payload run_components(const RunConfig& cfg) {
    const std::vector<MapDescriptor> period = cfg.maps();
    if (period.size() != 1) throw ConfigError("components needs a single map, not a sequence");
    const PointCloud cloud = cloud_for(cfg, period);
    const ComponentDecomposition d = decompose(cloud, period.front(), cfg.numeric.delta);
    const CriticalClass cc = critical_class(d, cfg.numeric.n, tol_for(cfg), grid_for(cfg), cfg.numeric.s_min,
                                            cfg.numeric.s_max);
    Payload out;
    Json comps = Json::array();
    out.rows.push_back({"component", "class", "points"});
    for (std::size_t i = 0; i < d.components.size(); ++i) {
        comps.push_back({{"id", i}, {"class", d.class_of[i]}, {"points", d.components[i].size()}});
        out.rows.push_back({std::to_string(i), std::to_string(d.class_of[i]), std::to_string(d.components[i].size())});
    }
    Json classes = Json::array();
    for (std::size_t k = 0; k < d.classes.size(); ++k) {
        classes.push_back({{"id", k}, {"components", d.classes[k]}, {"s_crit", num(cc.class_roots[k])}});
    }
    Json edges = Json::array();
    for (const auto& [a, b] : d.condensation_edges) edges.push_back(Json::array({a, b}));
    out.json = {{"delta", d.delta},
                {"points", cloud.points.size()},
                {"components", comps},
                {"classes", classes},
                {"condensation_edges", edges},
                {"selected_class", cc.class_id},
                {"s_crit", num(cc.s_crit)},
                {"invariant_points", cc.invariant_points.size()},
                {"warnings", d.warnings}};
    return out;
}

Payload run_diagnose(const RunConfig& cfg) {
    const Domain dom = cfg.resolved_domain();
    const DomainConstants k = domain_constants(dom.U, dom.K);
    const double eps = epsilon_ell(k, k.delta_big);
    const double tanh_half = std::tanh(0.5 * k.delta_big);
    Payload out;
    out.json = {{"rho", dom.K.rho()},
                {"rho_U", dom.U.rho()},
                {"ell", k.ell},
                {"alpha", k.alpha},
                {"delta_big", k.delta_big},
                {"delta_prime", k.delta_prime},
                {"beta", k.beta},
                {"diam_K", k.diam_K}};
    Json checks;
    checks["tanh_half_delta_big"] = tanh_half;
    checks["alpha_over_7"] = k.alpha / 7.0;
    checks["delta_big_verified"] = std::abs(tanh_half - k.alpha / 7.0) <= 1e-12;
    checks["epsilon_at_delta_big"] = eps;
    checks["epsilon_verified"] = std::abs(eps - 6.0 * std::log(7.0 / 6.0)) <= 1e-12;
    checks["mixing_depth"] = mixing_depth(k, k.beta);
    out.json["checks"] = checks;
    Json maps = Json::array();
    for (const MapDescriptor& m : cfg.maps()) {
        const DerivativeRange r = derivative_range(m);
        maps.push_back({{"degree", m.degree()},
                        {"sup_Df", num(r.sup)},
                        {"inf_Df", num(r.inf)},
                        {"min_local_degree", r.min_local_degree},
                        {"max_local_degree", r.max_local_degree},
                        {"condition_number", num(condition_number(m))},
                        {"degree_area_check", degree_area_check(m.degree(), r.sup)}});
    }
    out.json["maps"] = maps;
    out.rows.push_back({"key", "value"});
    for (const char* key : {"rho", "rho_U", "ell", "alpha", "delta_big", "delta_prime", "beta", "diam_K"}) {
        out.rows.push_back({key, csv_number(out.json[key].get<double>())});
    }
    out.rows.push_back({"tanh_half_delta_big", csv_number(tanh_half)});
    out.rows.push_back({"alpha_over_7", csv_number(k.alpha / 7.0)});
    out.rows.push_back({"epsilon_at_delta_big", csv_number(eps)});
    return out;
}

Payload dispatch(const RunConfig& cfg) {
    switch (cfg.subcommand) {
        case Subcommand::pressure: return run_pressure(cfg);
        case Subcommand::dimension: return run_dimension(cfg);
        case Subcommand::random_dim: return run_random(cfg);
        case Subcommand::sweep: return run_sweep(cfg);
        case Subcommand::boxdim: return run_boxdim(cfg);
        case Subcommand::components: return run_components(cfg);
        case Subcommand::diagnose: return run_diagnose(cfg);
    }
    throw ConfigError("unhandled subcommand");
}

}  // namespace

const char* version() noexcept { return HDIM_VERSION; }

std::string render_result(const RunConfig& cfg) {
    cfg.validate();
    const Json config = config_json(cfg);
    const Payload payload = dispatch(cfg);
    if (cfg.output.format == OutputFormat::json) {
        Json doc;
        doc["schema_version"] = kSchemaVersion;
        doc["version"] = version();
        doc["config"] = config;
        doc["result"] = payload.json;
        return doc.dump(2) + "\n";
    }
    std::ostringstream s;
    s << "# schema_version=" << kSchemaVersion << "\n# version=" << version() << "\n# config=" << config.dump()
      << "\n";
    for (const auto& row : payload.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << row[i];
        s << '\n';
    }
    return s.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw std::runtime_error("write to " + tmp.string() + " failed");
        }
    }
    fs::rename(tmp, target);
}

int run(const RunConfig& config, std::ostream& out, std::ostream& diag) {
    std::string result;
    try {
        result = render_result(config);
    } catch (const Error& e) {
        diag << e.what() << '\n';
        return e.is_config_error() ? 2 : 3;
    }
    try {
        if (config.output.path.empty()) {
            out << result;
        } else {
            write_atomic(config.output.path, result);
        }
    } catch (const std::exception& e) {
        diag << "IoError: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace hdim
