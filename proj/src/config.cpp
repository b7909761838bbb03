#include "hdim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"map", {"family", "N", "c_re", "c_im", "d", "branches", "cantor_branches", "cantor_ratio"}},
        {"domain", {"k", "rho_U", "rho_K"}},
        {"numeric",
         {"grid_shape", "n", "s", "s_min", "s_max", "tol", "max_iter", "method", "burn_in", "depth", "r_min",
          "cap", "radii", "radii_top", "radii_count", "radii_decades", "delta", "bases"}},
        {"ensemble", {"a_re", "a_im", "r", "lambda", "k", "seq_len", "seed", "replicas"}},
        {"sweep", {"axis", "values"}},
        {"output", {"path", "format"}},
    };
    return keys;
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double to_double(const std::string& text, const std::string& field) {
    const std::string t = boost::trim_copy(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || t.empty()) {
        throw ConfigError(field + ": not a number: '" + text + "'");
    }
    return v;
}

template <typename Int>
Int to_integer(const std::string& text, const std::string& field) {
    const std::string t = boost::trim_copy(text);
    Int v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || t.empty()) {
        throw ConfigError(field + ": not an integer: '" + text + "'");
    }
    return v;
}

std::size_t to_count(const std::string& text, const std::string& field) {
    const long long v = to_integer<long long>(text, field);
    if (v < 0) throw ConfigError(field + ": must be >= 0");
    return static_cast<std::size_t>(v);
}

std::vector<double> to_list(const std::string& text, const std::string& field) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(","));
    std::vector<double> out;
    for (const std::string& p : parts) {
        if (!boost::trim_copy(p).empty()) out.push_back(to_double(p, field));
    }
    return out;
}

std::vector<std::vector<IfsBranch>> to_branches(const std::string& text, const std::string& field) {
    std::vector<std::string> maps;
    boost::split(maps, text, boost::is_any_of("|"));
    std::vector<std::vector<IfsBranch>> out;
    for (const std::string& m : maps) {
        std::vector<std::string> items;
        boost::split(items, m, boost::is_any_of(";"));
        std::vector<IfsBranch> branches;
        for (const std::string& item : items) {
            if (boost::trim_copy(item).empty()) continue;
            const std::vector<double> v = to_list(item, field);
            if (v.size() != 4) throw ConfigError(field + ": a branch is 'ratio,translation,lo,hi'");
            branches.push_back({v[0], v[1], v[2], v[3]});
        }
        if (branches.empty()) throw ConfigError(field + ": empty map in the branch list");
        out.push_back(std::move(branches));
    }
    return out;
}

GridShape to_grid(const std::string& text, const std::string& field) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of("xX"));
    if (parts.size() != 2) throw ConfigError(field + ": expected <radial>x<angular>");
    const GridShape g{to_count(parts[0], field), to_count(parts[1], field)};
    if (g.n_radial < 2 || g.n_angular < 1) throw ConfigError(field + ": grid too small");
    return g;
}

}  // namespace

std::string to_string(Subcommand cmd) {
    switch (cmd) {
        case Subcommand::pressure: return "pressure";
        case Subcommand::dimension: return "dimension";
        case Subcommand::random_dim: return "random-dim";
        case Subcommand::sweep: return "sweep";
        case Subcommand::boxdim: return "boxdim";
        case Subcommand::components: return "components";
        case Subcommand::diagnose: return "diagnose";
    }
    return "?";
}

Subcommand parse_subcommand(const std::string& name) {
    for (Subcommand c : {Subcommand::pressure, Subcommand::dimension, Subcommand::random_dim, Subcommand::sweep,
                         Subcommand::boxdim, Subcommand::components, Subcommand::diagnose}) {
        if (to_string(c) == name) return c;
    }
    throw ConfigError("unknown subcommand '" + name + "'");
}

Domain RunConfig::resolved_domain() const {
    try {
        if (domain.rho_U || domain.rho_K) {
            if (!domain.rho_U || !domain.rho_K) throw ConfigError("[domain] give both rho_U and rho_K");
            return Domain(HyperbolicAnnulus(*domain.rho_U), HyperbolicAnnulus(*domain.rho_K));
        }
        return Domain::from_k(domain.k.value_or(0.99));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("[domain] ") + e.what());
    }
}

std::vector<MapDescriptor> RunConfig::maps() const {
    const Domain dom = resolved_domain();
    try {
        if (map.family == "power_plus_c") return {MapDescriptor::power_plus_c(map.N, map.c, dom)};
        if (map.family == "circle_power") return {MapDescriptor::circle_power(map.d, dom)};
        if (map.family == "uniform_cantor") {
            return {MapDescriptor::uniform_cantor(map.cantor_branches, map.cantor_ratio, dom)};
        }
        if (map.family == "linear_ifs") {
            if (map.branches.empty()) throw ConfigError("[map] linear_ifs needs branches");
            std::vector<MapDescriptor> out;
            for (const auto& b : map.branches) out.push_back(MapDescriptor::linear_ifs(b, dom));
            return out;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("[map] ") + e.what());
    }
    throw ConfigError("[map] unknown family '" + map.family + "'");
}

void RunConfig::validate() const {
    const bool random = subcommand == Subcommand::random_dim || subcommand == Subcommand::sweep;
    if (random) {
        ensemble.validate();
    } else {
        (void)maps();
    }
    const NumericConfig& nc = numeric;
    if (nc.n == 0) throw ConfigError("[numeric] n must be >= 1");
    if (!(nc.s_min < nc.s_max)) throw ConfigError("[numeric] need s_min < s_max");
    if (nc.tol && !(*nc.tol > 0.0)) throw ConfigError("[numeric] tol must be positive");
    if (nc.max_iter == 0) throw ConfigError("[numeric] max_iter must be >= 1");
    if (nc.method != "bracket" && nc.method != "exponents") {
        throw ConfigError("[numeric] method must be bracket or exponents");
    }
    if (subcommand == Subcommand::pressure && !nc.s) throw ConfigError("pressure needs [numeric] s");
    if (!(nc.r_min > 0.0)) throw ConfigError("[numeric] r_min must be positive");
    if (nc.cap == 0) throw ConfigError("[numeric] cap must be >= 1");
    if (nc.radii_count < 2) throw ConfigError("[numeric] radii_count must be >= 2");
    if (!(nc.radii_decades > 0.0)) throw ConfigError("[numeric] radii_decades must be positive");
    if (nc.radii_top && !(*nc.radii_top > 0.0)) throw ConfigError("[numeric] radii_top must be positive");
    for (double r : nc.radii) {
        if (!(r > 0.0)) throw ConfigError("[numeric] radii must be positive");
    }
    if (nc.delta && !(*nc.delta > 0.0)) throw ConfigError("[numeric] delta must be positive");
    for (double t : nc.bases) {
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("[numeric] bases must lie in [0,1]");
    }
    if (subcommand == Subcommand::sweep && sweep.values.empty()) throw ConfigError("[sweep] values missing");
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    RunConfig cfg;
    bool ensemble_k = false;
    for (const auto& [section, body] : tree) {
        const auto allowed = allowed_keys().find(section);
        if (allowed == allowed_keys().end()) {
            throw ConfigError(body.empty() ? "key '" + section + "' outside a section"
                                           : "unknown section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            if (!allowed->second.contains(key)) throw ConfigError("unknown key " + where(section, key));
            const std::string v = boost::trim_copy(node.data());
            const std::string f = where(section, key);
            if (section == "map") {
                if (key == "family") cfg.map.family = v;
                else if (key == "N") cfg.map.N = to_integer<int>(v, f);
                else if (key == "c_re") cfg.map.c.real(to_double(v, f));
                else if (key == "c_im") cfg.map.c.imag(to_double(v, f));
                else if (key == "d") cfg.map.d = to_integer<int>(v, f);
                else if (key == "branches") cfg.map.branches = to_branches(v, f);
                else if (key == "cantor_branches") cfg.map.cantor_branches = to_integer<int>(v, f);
                else if (key == "cantor_ratio") cfg.map.cantor_ratio = to_double(v, f);
            } else if (section == "domain") {
                if (key == "k") cfg.domain.k = to_double(v, f);
                else if (key == "rho_U") cfg.domain.rho_U = to_double(v, f);
                else if (key == "rho_K") cfg.domain.rho_K = to_double(v, f);
            } else if (section == "numeric") {
                NumericConfig& n = cfg.numeric;
                if (key == "grid_shape") n.grid = to_grid(v, f);
                else if (key == "n") n.n = to_count(v, f);
                else if (key == "s") n.s = to_double(v, f);
                else if (key == "s_min") n.s_min = to_double(v, f);
                else if (key == "s_max") n.s_max = to_double(v, f);
                else if (key == "tol") n.tol = to_double(v, f);
                else if (key == "max_iter") n.max_iter = to_count(v, f);
                else if (key == "method") n.method = v;
                else if (key == "burn_in") n.burn_in = to_count(v, f);
                else if (key == "depth") n.depth = to_count(v, f);
                else if (key == "r_min") n.r_min = to_double(v, f);
                else if (key == "cap") n.cap = to_count(v, f);
                else if (key == "radii") n.radii = to_list(v, f);
                else if (key == "radii_top") n.radii_top = to_double(v, f);
                else if (key == "radii_count") n.radii_count = to_count(v, f);
                else if (key == "radii_decades") n.radii_decades = to_double(v, f);
                else if (key == "delta") n.delta = to_double(v, f);
                else if (key == "bases") n.bases = to_list(v, f);
            } else if (section == "ensemble") {
                EnsembleSpec& e = cfg.ensemble;
                if (key == "a_re") e.a.real(to_double(v, f));
                else if (key == "a_im") e.a.imag(to_double(v, f));
                else if (key == "r") e.r = to_double(v, f);
                else if (key == "lambda") e.lambda = to_double(v, f);
                else if (key == "k") {
                    e.k = to_double(v, f);
                    ensemble_k = true;
                }
                else if (key == "seq_len") e.seq_len = to_count(v, f);
                else if (key == "seed") e.seed = to_integer<std::uint64_t>(v, f);
                else if (key == "replicas") e.replicas = to_count(v, f);
            } else if (section == "sweep") {
                if (key == "axis") {
                    try {
                        cfg.sweep.axis = parse_sweep_axis(v);
                    } catch (const Error& e) {
                        throw ConfigError(f + ": " + e.what());
                    }
                } else if (key == "values") {
                    cfg.sweep.values = to_list(v, f);
                }
            } else if (section == "output") {
                if (key == "path") cfg.output.path = v;
                else if (key == "format") {
                    if (v == "json") cfg.output.format = OutputFormat::json;
                    else if (v == "csv") cfg.output.format = OutputFormat::csv;
                    else throw ConfigError(f + ": expected csv or json");
                }
            }
        }
    }
    // Random runs live on the domain of [domain] k unless the ensemble sets its own.
    if (!ensemble_k && cfg.domain.k) cfg.ensemble.k = *cfg.domain.k;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in);
}

}  // namespace hdim
