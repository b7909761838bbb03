#pragma once

// Run configuration: INI text with sections [map], [domain], [numeric],
// [ensemble], [sweep] and [output]. Unknown sections or keys are errors.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hdim/boxcount.hpp"
#include "hdim/ensemble.hpp"
#include "hdim/maps.hpp"
#include "hdim/transfer.hpp"

namespace hdim {

enum class Subcommand { pressure, dimension, random_dim, sweep, boxdim, components, diagnose };
std::string to_string(Subcommand cmd);
Subcommand parse_subcommand(const std::string& name);  // ConfigError if unknown

enum class OutputFormat { json, csv };

struct MapConfig {
    std::string family = "power_plus_c";  // power_plus_c, circle_power, linear_ifs, uniform_cantor
    int N = 0;
    Complex c{0.0, 0.0};
    int d = 2;
    // linear_ifs: "ratio,translation,lo,hi; ..." per map, maps of a periodic
    // sequence separated by '|'.
    std::vector<std::vector<IfsBranch>> branches;
    int cantor_branches = 2;
    double cantor_ratio = 1.0 / 3.0;
};

struct DomainConfig {
    std::optional<double> k;  // default 0.99 when no radii are given
    std::optional<double> rho_U;
    std::optional<double> rho_K;
};

struct NumericConfig {
    std::optional<GridShape> grid;  // default per subcommand
    std::size_t n = 8;
    std::optional<double> s;  // pressure only
    double s_min = 0.0;
    double s_max = 2.2;
    std::optional<double> tol;  // default per subcommand
    std::size_t max_iter = 60;
    std::string method = "bracket";  // or "exponents" (tail window)
    std::size_t burn_in = 20;
    // boxdim / components
    std::size_t depth = 0;  // 0: from the geometry
    double r_min = 1e-3;
    std::size_t cap = kDefaultCloudCap;
    std::vector<double> radii;
    std::optional<double> radii_top;
    std::size_t radii_count = 12;
    double radii_decades = 2.0;
    std::optional<double> delta;
    std::vector<double> bases;  // t in [0,1] for IFS clouds
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::lambda;
    std::vector<double> values;
};

struct OutputConfig {
    std::string path;  // empty: standard output
    OutputFormat format = OutputFormat::json;
};

struct RunConfig {
    Subcommand subcommand = Subcommand::dimension;
    MapConfig map;
    DomainConfig domain;
    NumericConfig numeric;
    EnsembleSpec ensemble;
    SweepConfig sweep;
    OutputConfig output;

    Domain resolved_domain() const;
    // One period of the map sequence.
    std::vector<MapDescriptor> maps() const;
    // Cross-field checks; throws ConfigError.
    void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace hdim
