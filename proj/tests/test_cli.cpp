#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hdim/config.hpp"
#include "hdim/errors.hpp"
#include "hdim/run.hpp"
#include "json.hpp"

using namespace hdim;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

RunConfig parse(const std::string& text, Subcommand cmd = Subcommand::dimension) {
    std::istringstream in(text);
    RunConfig c = parse_config(in);
    c.subcommand = cmd;
    return c;
}

const char* kCantor =
    "[map]\nfamily = uniform_cantor\ncantor_branches = 2\ncantor_ratio = 0.3333333333333333\n"
    "[domain]\nk = 0.99\n[numeric]\ngrid_shape = 64x1\nn = 4\ntol = 1e-9\n";

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / ("hdim_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

int shell(const std::string& args) {
    const std::string cmd = std::string(HDIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
    const RunConfig c = parse(
        "[map]\nfamily = power_plus_c\nN = 1\nc_re = 0.05\nc_im = -0.02\n"
        "[numeric]\ngrid_shape = 32x48\nn = 6\ns = 0.7\n"
        "[ensemble]\nlambda = 0.5\nseed = 9\n[output]\nformat = csv\n");
    CHECK(c.map.N == 1);
    CHECK(c.map.c == Complex(0.05, -0.02));
    REQUIRE(c.numeric.grid.has_value());
    CHECK(c.numeric.grid->n_radial == 32);
    CHECK(c.numeric.grid->n_angular == 48);
    CHECK(c.numeric.n == 6);
    CHECK(*c.numeric.s == 0.7);
    CHECK(c.ensemble.lambda == 0.5);
    CHECK(c.ensemble.seed == 9);
    CHECK(c.output.format == OutputFormat::csv);

    const RunConfig ifs = parse("[map]\nfamily = linear_ifs\nbranches = 0.5,0,0,1; 0.5,0.5,0,1 | 0.25,0,0,1\n");
    REQUIRE(ifs.map.branches.size() == 2);
    CHECK(ifs.map.branches[0].size() == 2);
    CHECK(ifs.map.branches[0][1].translation == 0.5);
    CHECK(ifs.maps().size() == 2);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("[map]\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse("[plot]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[numeric]\nn = 8x\n"), ConfigError);
    CHECK_THROWS_AS(parse("[numeric]\nn = -3\n"), ConfigError);
    CHECK_THROWS_AS(parse("[numeric]\ngrid_shape = 64\n"), ConfigError);
    CHECK_THROWS_AS(parse("[map]\nfamily = rational\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nr = -0.1\n", Subcommand::random_dim).validate(), ConfigError);
    CHECK_THROWS_AS(parse("[domain]\nk = 1.5\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse(kCantor, Subcommand::pressure).validate(), ConfigError);  // no s
    CHECK_THROWS_AS(parse_subcommand("fit"), ConfigError);
    CHECK(parse_subcommand("random-dim") == Subcommand::random_dim);
    CHECK(to_string(Subcommand::random_dim) == "random-dim");
}

TEST_CASE("dimension result document") {
    const Json doc = Json::parse(render_result(parse(kCantor)));
    CHECK(doc["schema_version"] == kSchemaVersion);
    CHECK(doc["version"] == version());
    CHECK(doc["config"]["subcommand"] == "dimension");
    const double s = doc["result"]["s_crit"];
    CHECK(std::abs(s - std::log(2.0) / std::log(3.0)) <= 1e-6);
    CHECK(doc["result"]["s_lower"] <= doc["result"]["s_upper"]);
}

TEST_CASE("rendering is deterministic") {
    const RunConfig c = parse(
        "[ensemble]\na_re = 0.05\nlambda = 0.5\nseq_len = 60\nreplicas = 2\nseed = 4\n"
        "[numeric]\ngrid_shape = 16x32\n",
        Subcommand::random_dim);
    CHECK(render_result(c) == render_result(c));
    RunConfig other = c;
    other.ensemble.seed = 5;
    CHECK(render_result(c) != render_result(other));
}

TEST_CASE("diagnose constants") {
    const Json doc = Json::parse(render_result(parse("[domain]\nk = 0.99\n", Subcommand::diagnose)));
    const Json& checks = doc["result"]["checks"];
    CHECK(std::abs(checks["tanh_half_delta_big"].get<double>() - checks["alpha_over_7"].get<double>()) <= 1e-12);
    CHECK(checks["delta_big_verified"] == true);
    CHECK(checks["epsilon_verified"] == true);
    CHECK(doc["result"]["rho"].get<double>() == doctest::Approx(0.495));
}

TEST_CASE("pressure CSV") {
    RunConfig c = parse(std::string(kCantor) + "s = 0.5\n", Subcommand::pressure);
    c.output.format = OutputFormat::csv;
    std::istringstream in(render_result(c));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# schema_version", 0) == 0);
    while (line.rfind('#', 0) == 0) std::getline(in, line);
    CHECK(line == "step,m_k_log,M_k_log,log_p_k,clamped_points");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("atomic write") {
    const fs::path dir = scratch_dir();
    const fs::path target = dir / "out.json";
    write_atomic(target.string(), "first\n");
    write_atomic(target.string(), "second\n");
    CHECK(slurp(target) == "second\n");
    CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
    CHECK_THROWS_AS(write_atomic((dir / "missing" / "x.json").string(), "x"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("run reports errors without writing") {
    const fs::path dir = scratch_dir();
    RunConfig c = parse("[ensemble]\nr = -0.1\n", Subcommand::random_dim);
    c.output.path = (dir / "bad.json").string();
    std::ostringstream out;
    std::ostringstream diag;
    CHECK(run(c, out, diag) == 2);
    CHECK(diag.str().rfind("ConfigError", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "bad.json"));

    // A bracket that misses the root is a numeric failure.
    RunConfig miss = parse(std::string(kCantor) + "s_min = 0.9\n");
    miss.output.path = (dir / "miss.json").string();
    CHECK(run(miss, out, diag) == 3);
    CHECK_FALSE(fs::exists(dir / "miss.json"));

    RunConfig good = parse(kCantor);
    good.output.path = (dir / "good.json").string();
    CHECK(run(good, out, diag) == 0);
    CHECK(slurp(dir / "good.json") == render_result(good));
    good.output.path = (dir / "no_such_dir" / "good.json").string();
    CHECK(run(good, out, diag) == 1);
    fs::remove_all(dir);
}

TEST_CASE("command line") {
    const fs::path dir = scratch_dir();
    const fs::path cfg = dir / "cantor.ini";
    std::ofstream(cfg) << kCantor;
    const fs::path bad = dir / "bad.ini";
    std::ofstream(bad) << "[numeric]\nwobble = 1\n";

    CHECK(shell("--version") == 0);
    CHECK(shell("") == 2);
    CHECK(shell("frobnicate") == 2);
    CHECK(shell("dimension --config " + (dir / "absent.ini").string()) == 2);
    CHECK(shell("dimension --config " + bad.string() + " --out " + (dir / "x.json").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "x.json"));

    const fs::path a = dir / "a.json";
    const fs::path b = dir / "b.json";
    REQUIRE(shell("dimension --config " + cfg.string() + " --out " + a.string()) == 0);
    REQUIRE(shell("dimension --config " + cfg.string() + " --jobs 2 --out " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    const Json doc = Json::parse(slurp(a));
    CHECK(std::abs(doc["result"]["s_crit"].get<double>() - std::log(2.0) / std::log(3.0)) <= 1e-6);

    const fs::path csv = dir / "p.csv";
    REQUIRE(shell("pressure --config " + cfg.string() + " --format csv --out " + csv.string()) == 2);  // no s
    fs::remove_all(dir);
}

}
