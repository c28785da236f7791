#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "silt/commands.hpp"

using namespace silt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("silt_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunConfig small_estimate(const fs::path& out) {
    RunConfig c;
    c.command = "estimate";
    c.hurst = {0.6, 3};
    c.mc.replicates = 12;
    c.mc.eps_list = {0.2, 0.1};
    c.mc.steps_per_unit = 32;
    c.horizons = {0.5, 1.0};
    c.out_dir = out.string();
    return c;
}

} // namespace

TEST_CASE("run config round-trips through JSON", "[io]") {
    RunConfig c;
    c.command = "verify";
    c.experiment = "tightness";
    c.hurst = {0.65, 4};
    c.mc.replicates = 123;
    c.mc.base_seed = 0xFFFFFFFFFFFFFFFFULL;
    c.mc.eps_list = {0.3, 0.1 + 0.2, 0.01};
    c.mc.eps_list = {0.3, 0.1, 1.0 / 3.0 / 10.0};
    c.mc.backend = Backend::Circulant;
    c.quad.rel_tol = 1e-7;
    c.quad.transform = Transform::Tangent;
    c.quad.truncation_radius = 37.5;
    c.horizons = {0.25, 0.75, 1.0};
    c.threads = 3;
    c.tightness_p = 2.25;
    c.hermite_enabled = false;
    c.path_steps = 9;
    const json j = to_json(c);
    const RunConfig d = run_config_from_json(json::parse(j.dump()));
    CHECK(to_json(d) == j);
    CHECK(d.mc.eps_list == c.mc.eps_list);
    CHECK(d.mc.base_seed == c.mc.base_seed);
    CHECK(d.quad.truncation_radius == 37.5);

    const fs::path dir = scratch("roundtrip");
    save_run_config(c, dir / "c.json");
    CHECK(to_json(load_run_config(dir / "c.json")) == j);

    RunConfig inf;
    const RunConfig inf2 = run_config_from_json(to_json(inf));
    CHECK(std::isinf(inf2.quad.truncation_radius));
}

TEST_CASE("config errors", "[io]") {
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
    const fs::path dir = scratch("errors");
    {
        std::ofstream(dir / "bad.json") << "{ \"H\": 0.6, ";
    }
    CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"Hurst": 0.6})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"H": "x"})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"H": 1.5})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"monte_carlo": {"eps_list": [0.01, 0.1]}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"quadrature": {"transform": "spline"}})")), ConfigError);
    try {
        load_run_config("/nonexistent/config.json");
    } catch (const Error& e) {
        CHECK(static_cast<int>(e.exit_code()) == 2);
    }
}

TEST_CASE("exit codes by error class", "[io]") {
    CHECK(static_cast<int>(ConfigError("x").exit_code()) == 2);
    CHECK(static_cast<int>(RegimeError("x").exit_code()) == 3);
    CHECK(static_cast<int>(DomainError("x").exit_code()) == 4);
    CHECK(static_cast<int>(IoError("x").exit_code()) == 5);
}

TEST_CASE("path files have one row per node and re-ingest exactly", "[io]") {
    const fs::path dir = scratch("paths");
    RunConfig c;
    c.hurst = {0.7, 2};
    c.path_steps = 4;
    c.paths = 2;
    c.out_dir = dir.string();
    std::ostringstream log;
    CHECK(cmd_simulate(c, log) == 0);
    const CsvTable t = read_csv(dir / "path_0000.csv");
    CHECK(t.rows.size() == 5);
    CHECK(t.columns.size() == 2 + 2);
    CHECK(t.metadata.at("H").get<double>() == 0.7);
    CHECK(t.metadata.contains("seed"));

    // a longer path: the functional on the re-read path is bit-identical
    c.path_steps = 200;
    c.paths = 1;
    CHECK(cmd_simulate(c, log) == 0);
    const FbmPath back = path_from_table(read_csv(dir / "path_0000.csv"));
    const FbmPath orig = sample_fbm(TimeGrid{1.0, 200}, {0.7, 2}, replicate_seed(c.mc.base_seed, 0));
    CHECK(back.values == orig.values);
    CHECK(silt_estimate(back, 0.05, 1.0) == silt_estimate(orig, 0.05, 1.0));
}

TEST_CASE("estimate files", "[io]") {
    const fs::path dir = scratch("estimate");
    const RunConfig c = small_estimate(dir / "a");
    std::ostringstream log;
    CHECK(cmd_estimate(c, log) == 0);
    const CsvTable t = read_csv(dir / "a" / "samples.csv");
    CHECK(t.rows.size() == 12u * 2u * 2u);
    CHECK(t.columns.back() == "rescaled");
    CHECK(t.metadata.at("monte_carlo").at("replicates").get<int>() == 12);
    CHECK_FALSE(t.metadata.contains("threads"));

    // rerun, other directory, other thread count: identical bytes
    const char* saved = std::getenv(kThreadsEnvVar);
    std::string keep = saved ? saved : "";
    unsetenv(kThreadsEnvVar);
    RunConfig c2 = small_estimate(dir / "b");
    c2.threads = 3;
    c2.mc.threads = 3;
    CHECK(cmd_estimate(c2, log) == 0);
    if (saved) setenv(kThreadsEnvVar, keep.c_str(), 1);
    CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
}

TEST_CASE("constants table gates rows by regime", "[io]") {
    const fs::path dir = scratch("constants");
    auto status = [](const CsvTable& t, const std::string& name) {
        for (const auto& r : t.rows)
            if (r[0] == name) return r[1];
        return std::string("missing");
    };
    RunConfig c;
    c.out_dir = dir.string();
    c.max_chaos_order = 2;
    c.quad.rel_tol = 1e-3;
    std::ostringstream log;
    c.hurst = {0.6, 3};
    CHECK(cmd_constants(c, log) == 0);
    CsvTable t = read_csv(dir / "constants.csv");
    CHECK(status(t, "sigma^2") == "ok");
    CHECK(status(t, "sigma_2^2") == "ok");
    CHECK(status(t, "Lambda") == "not-applicable");
    CHECK(status(t, "rho") == "not-applicable");

    c.hurst = {0.8, 2};
    CHECK(cmd_constants(c, log) == 0);
    t = read_csv(dir / "constants.csv");
    CHECK(status(t, "Lambda") == "ok");
    CHECK(status(t, "c_H") == "ok");
    CHECK(status(t, "sigma^2") == "not-applicable");

    c.hurst = {0.75, 3};
    CHECK(cmd_constants(c, log) == 0);
    t = read_csv(dir / "constants.csv");
    CHECK(status(t, "rho") == "ok");
}

TEST_CASE("verify writes a report and matching exit status", "[io]") {
    const fs::path dir = scratch("verify");
    RunConfig c;
    c.command = "verify";
    c.experiment = "subcritical";
    c.hurst = {0.6, 3};
    c.mc.replicates = 60;
    c.mc.eps_list = {0.2, 0.1, 0.05};
    c.mc.steps_per_unit = 32;
    c.quad.rel_tol = 1e-3;
    c.out_dir = dir.string();
    std::ostringstream log;
    const int rc = dispatch("verify", c, log);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(rc == (report.at("passed").get<bool>() ? 0 : 4));
    for (const auto& chk : report.at("checks")) CHECK(chk.contains("pass"));
    CHECK(report.at("run_config").at("H").get<double>() == 0.6);
    const CsvTable t = read_csv(dir / "samples.csv");
    CHECK(t.rows.size() == 60u * 3u * 2u);
    std::ostringstream rep;
    CHECK(cmd_report(c, rep) == rc);
    CHECK(rep.str().find("experiment subcritical") != std::string::npos);

    RunConfig bad = c;
    bad.hurst = {0.75, 2};
    bad.experiment = "auto";
    CHECK_THROWS_AS(run_experiment(bad), RegimeError);
    CHECK_THROWS_AS(dispatch("frobnicate", c, log), ConfigError);
}

TEST_CASE("CSV reader rejects malformed files", "[io]") {
    const fs::path dir = scratch("csv");
    {
        std::ofstream(dir / "nohdr.csv") << "a,b\n1,2\n";
    }
    CHECK_THROWS_AS(read_csv(dir / "nohdr.csv"), IoError);
    {
        std::ofstream(dir / "ragged.csv") << "# {}\na,b\n1,2,3\n";
    }
    CHECK_THROWS_AS(read_csv(dir / "ragged.csv"), IoError);
    CHECK_THROWS_AS(read_csv(dir / "missing.csv"), IoError);
    CHECK_THROWS_AS(parse_double("1.5x"), IoError);
    CHECK(parse_double(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}
