// hdim: dimension estimates for conformal repellers from a config file.

#include <cstdint>
#include <iostream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "hdim/config.hpp"
#include "hdim/errors.hpp"
#include "hdim/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Hausdorff dimension of conformal repellers via transfer operators"};
    app.set_version_flag("--version", std::string(hdim::version()));
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::string out_path;
    std::string format;
    int jobs = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_path, "result file (default: standard output)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "overrides [ensemble] seed");

    for (const char* name : {"pressure", "dimension", "random-dim", "sweep", "boxdim", "components", "diagnose"}) {
        app.add_subcommand(name);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    hdim::RunConfig config;
    try {
        if (!config_path.empty()) config = hdim::load_config(config_path);
        config.subcommand = hdim::parse_subcommand(app.get_subcommands().front()->get_name());
    } catch (const hdim::Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    if (!out_path.empty()) config.output.path = out_path;
    if (format == "csv") config.output.format = hdim::OutputFormat::csv;
    if (format == "json") config.output.format = hdim::OutputFormat::json;
    if (*seed_opt) config.ensemble.seed = seed;
    if (jobs > 0) omp_set_num_threads(jobs);

    return hdim::run(config, std::cout, std::cerr);
}
