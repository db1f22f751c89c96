#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hvfif/config.hpp"
#include "hvfif/run.hpp"

using namespace hvfif;
namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = HVFIF_CONFIG_DIR;
const std::string kCliPath = HVFIF_CLI_PATH;

std::string config_path(const std::string& name) {
    return (fs::path(kConfigDir) / name).string();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("hvfif_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_temp_config(const std::string& tag, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / ("hvfif_cfg_" + tag + ".json");
    std::ofstream out(p);
    out << body;
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kCliPath) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("all shipped configs load") {
    for (const char* name :
         {"example_a.json", "example_b.json", "example_c.json", "example_d.json", "const04.json",
          "const005.json", "zero.json", "stab_y3.json", "surface_zero.json",
          "surface_const02.json", "surface_const005.json"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_config(config_path(name)));
    }
}

TEST_CASE("config validation errors") {
    SUBCASE("factor count mismatch") {
        const auto p = write_temp_config("count", R"({
            "mode": "curve",
            "data": {"x": [0, 0.25, 0.5, 0.75, 1], "y": [1, 2, 3, 4, 5], "z": [0, 0, 0, 0, 0]},
            "factors": {"s": ["0.1", "0.1", "0.1"], "s_tilde": ["0", "0", "0"],
                        "s_prime": ["0.1", "0.1", "0.1"], "s_tilde_prime": ["0", "0", "0"]}
        })");
        CHECK_THROWS_WITH_AS(load_config(p.string()),
                             doctest::Contains("expected 4 factor quadruples, found 3"), Error);
    }
    SUBCASE("empty factors block names the missing key") {
        const auto p = write_temp_config("empty", R"({
            "mode": "curve",
            "data": {"x": [0, 0.5, 1], "y": [1, 2, 3], "z": [0, 0, 0]},
            "factors": {}
        })");
        CHECK_THROWS_WITH_AS(load_config(p.string()),
                             doctest::Contains("missing field \"factors.s\""), Error);
    }
    SUBCASE("missing data field") {
        const auto p = write_temp_config("nodata", R"({
            "mode": "curve",
            "data": {"y": [1, 2, 3], "z": [0, 0, 0]},
            "factors": {"s": ["0"], "s_tilde": ["0"], "s_prime": ["0"], "s_tilde_prime": ["0"]}
        })");
        CHECK_THROWS_WITH_AS(load_config(p.string()), doctest::Contains("missing field \"data.x\""),
                             Error);
    }
    SUBCASE("type mismatch") {
        const auto p = write_temp_config("type", R"({
            "mode": "curve",
            "data": {"x": "nope", "y": [1, 2, 3], "z": [0, 0, 0]},
            "factors": {"s": ["0"], "s_tilde": ["0"], "s_prime": ["0"], "s_tilde_prime": ["0"]}
        })");
        CHECK_THROWS_WITH_AS(load_config(p.string()), doctest::Contains("type mismatch at \"data.x\""),
                             Error);
    }
    SUBCASE("expression errors carry the entry path and offset") {
        const auto p = write_temp_config("expr", R"({
            "mode": "curve",
            "data": {"x": [0, 0.5, 1], "y": [1, 2, 3], "z": [0, 0, 0]},
            "factors": {"s": ["0.1", "2.9*("], "s_tilde": ["0", "0"],
                        "s_prime": ["0.1", "0.1"], "s_tilde_prime": ["0", "0"]}
        })");
        try {
            load_config(p.string());
            FAIL("expected throw");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("factors.s[1]") != std::string::npos);
            CHECK(msg.find("offset 5") != std::string::npos);
        }
    }
    SUBCASE("curve factors must not use y") {
        const auto p = write_temp_config("usey", R"({
            "mode": "curve",
            "data": {"x": [0, 0.5, 1], "y": [1, 2, 3], "z": [0, 0, 0]},
            "factors": {"s": ["0.1*y", "0.1"], "s_tilde": ["0", "0"],
                        "s_prime": ["0.1", "0.1"], "s_tilde_prime": ["0", "0"]}
        })");
        CHECK_THROWS_WITH_AS(load_config(p.string()), doctest::Contains("uses variable y"), Error);
    }
}

TEST_CASE("generate emits the interpolant for zero factors") {
    const auto dir = fresh_dir("gen_zero");
    const auto cfg = load_config(config_path("zero.json"));
    const auto res = run_command("generate", cfg, dir.string(), std::nullopt);
    CHECK(res.exit_code == 0);
    const std::string csv = slurp(dir / "samples.csv");
    CHECK(csv.rfind("x,f1,f2\n", 0) == 0);
    // row at x = 0.125 interpolates (0,20)-(0.25,30)
    CHECK(csv.find("\n0.125,25,") != std::string::npos);
    CHECK(fs::exists(dir / "curve.pgm"));
    const std::string pgm = slurp(dir / "curve.pgm");
    CHECK(pgm.rfind("P5\n", 0) == 0);
}

TEST_CASE("analyze report carries the collapsed dimension bounds") {
    const auto dir = fresh_dir("analyze_04");
    const auto cfg = load_config(config_path("const04.json"));
    const auto res = run_command("analyze", cfg, dir.string(), std::nullopt);
    CHECK(res.exit_code == 0);

    const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
    for (const char* key :
         {"config_echo", "contraction", "dimension", "smoothness", "stability", "empirical"})
        CHECK(doc.contains(key));

    const auto& dim = doc.at("dimension");
    const double expected = 1.0 + std::log(3.2) / std::log(4.0);
    CHECK(dim.at("bound_low").get<double>() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(dim.at("bound_up").get<double>() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(dim.at("case").get<std::string>() == "a");
    CHECK(dim.at("hypothesis").at("triple_found").get<bool>());

    const double slope = doc.at("empirical").at("dimension_slope").get<double>();
    CHECK(std::fabs(slope - expected) <= 0.12);

    const auto& smooth = doc.at("smoothness");
    CHECK(smooth.at("tau1").get<double>() ==
          doctest::Approx(1.0 + std::log(3.2) / std::log(0.25)).epsilon(1e-12));

    CHECK(fs::exists(dir / "boxcounts.csv"));
    const std::string bc = slurp(dir / "boxcounts.csv");
    CHECK(bc.rfind("epsilon,count\n", 0) == 0);
}

TEST_CASE("stability command with zero magnitude reports tiny diffs") {
    const auto dir = fresh_dir("stab_zero");
    auto cfg = load_config(config_path("const04.json"));
    cfg.analysis.stability.magnitude = 0.0;
    cfg.analysis.stability.trials = 2;
    const auto res = run_command("stability", cfg, dir.string(), std::nullopt);
    CHECK(res.exit_code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
    const auto& reports = doc.at("stability");
    REQUIRE(reports.is_array());
    CHECK(reports.size() == 6);
    for (const auto& r : reports) {
        CHECK(r.at("measured_sup_diff").get<double>() <= 1e-8);
        CHECK(r.at("satisfied").get<bool>());
    }
}

TEST_CASE("surface command writes csv, pgm and the report") {
    const auto dir = fresh_dir("surface_02");
    const auto cfg = load_config(config_path("surface_const02.json"));
    const auto res = run_command("surface", cfg, dir.string(), std::nullopt);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "surface.csv"));
    const std::string csv = slurp(dir / "surface.csv");
    CHECK(csv.rfind("x,y,f1,f2\n", 0) == 0);

    const std::string pgm = slurp(dir / "surface.pgm");
    CHECK(pgm.rfind("P5\n", 0) == 0);
    CHECK(pgm.find("65535") != std::string::npos);   // 16-bit heightmap
    CHECK(pgm.find("f1_min=") != std::string::npos); // recoverable rescale

    const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(doc.at("dimension").at("bound_low").get<double>() ==
          doctest::Approx(1.0 + std::log(6.4) / std::log(4.0)).epsilon(1e-12));
    const double slope = doc.at("empirical").at("dimension_slope").get<double>();
    CHECK(std::fabs(slope - 2.3390) <= 0.2);
}

TEST_CASE("identical configs produce byte-identical artifacts") {
    const auto dir1 = fresh_dir("det_1");
    const auto dir2 = fresh_dir("det_2");
    const auto cfg = load_config(config_path("const04.json"));
    (void)run_command("analyze", cfg, dir1.string(), std::nullopt);
    (void)run_command("analyze", cfg, dir2.string(), std::nullopt);
    CHECK(slurp(dir1 / "report.json") == slurp(dir2 / "report.json"));
    CHECK(slurp(dir1 / "boxcounts.csv") == slurp(dir2 / "boxcounts.csv"));

    auto scfg = load_config(config_path("stab_y3.json"));
    scfg.analysis.stability.trials = 3;
    (void)run_command("stability", scfg, dir1.string(), 42u);
    (void)run_command("stability", scfg, dir2.string(), 42u);
    CHECK(slurp(dir1 / "report.json") == slurp(dir2 / "report.json"));
}

TEST_CASE("empirical dimension slope of any sample set stays in [0.95, 2]") {
    for (const char* name : {"example_a.json", "example_b.json", "example_c.json",
                             "example_d.json", "zero.json", "const04.json", "const005.json"}) {
        const auto cfg = load_config(config_path(name));
        const auto h = build_univariate(cfg.curve_data, cfg.curve_factors, cfg.build);
        const auto ss = subdivide(h, 8);
        const auto dim =
            estimate_dimension_from_samples(ss, h.domain(), h.interval_count(), {1, 2, 3, 4, 5, 6});
        CAPTURE(name);
        CHECK(dim.slope >= 0.95);
        CHECK(dim.slope <= 2.0);
    }
}

TEST_CASE("CLI exit codes: 0 ok, 2 hypothesis failure, 1 error") {
    const auto dir = fresh_dir("cli");
    CHECK(run_cli("generate --config " + config_path("zero.json") + " --out " + dir.string()) == 0);
    // the sine/cosine example is loadable and evaluable but not certified
    // contractive: results are still emitted with exit code 2
    CHECK(run_cli("generate --config " + config_path("example_c.json") + " --out " + dir.string()) ==
          2);
    CHECK(fs::exists(dir / "samples.csv"));
    CHECK(run_cli("generate --config /nonexistent.json") == 1);
    const auto bad = write_temp_config("cli_bad", "{ not json");
    CHECK(run_cli("analyze --config " + bad.string()) == 1);
}
