#include "carleman/commands.hpp"
#include "carleman/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace carleman;

namespace {

std::string config_path(const std::string& name) {
    return std::string(CARLEMAN_CONFIG_DIR) + "/" + name + ".json";
}

std::string tmp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("carleman_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// a small, fast configuration derived from the two-strip fixture
ExperimentConfig small_two_strip(const std::string& out) {
    ExperimentConfig c = load_config(config_path("two_strip_square"));
    c.grid_n = 16;
    c.grid_steps = 64;
    c.suite_size = 6;
    c.ensemble = 4;
    c.s_points = 5;
    c.mesh_check = false;
    c.out_dir = out;
    return c;
}

}  // namespace

TEST_CASE("bundled fixtures parse and validate") {
    for (const std::string name : {"condA_square", "potential_annulus", "two_strip_square",
                                   "rotation_annulus", "polar_m0", "polar_m1", "polar_m2"}) {
        auto c = load_config(config_path(name));
        CHECK(c.schema_version == 1);
        CHECK(c.name == name);
        CHECK(c.horizon > 0.0);
    }
}

TEST_CASE("malformed configurations are rejected") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::invalid_argument);
    auto dir = tmp_dir("badcfg");
    {
        std::ofstream out(dir + "/bad.json");
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(dir + "/bad.json"), std::invalid_argument);
    {
        std::ofstream out(dir + "/old.json");
        out << R"({"schema_version": 0, "domain": {"shape": "disk", "radius": 1}, "field": {"builtin": "rotation"}})";
    }
    CHECK_THROWS_AS(load_config(dir + "/old.json"), std::invalid_argument);
    {
        std::ofstream out(dir + "/csv_missing.json");
        out << R"({"schema_version": 1, "domain": {"shape": "disk", "radius": 1},)"
            << R"( "field": {"builtin": "csv", "path": "/nope.csv"}})";
    }
    CHECK_THROWS_AS(load_config(dir + "/csv_missing.json"), std::invalid_argument);
}

TEST_CASE("grid-scale override rescales resolution and steps together") {
    auto c = load_config(config_path("condA_square"));
    ConfigOverrides ov;
    ov.grid_scale = 0.5;
    ov.seed = 99;
    apply_overrides(c, ov);
    CHECK(c.grid_n == 32);
    CHECK(c.grid_steps == 128);
    CHECK(c.seed == 99);
}

TEST_CASE("analyze exit codes follow the single-direction check") {
    std::ostringstream out;
    auto ca = load_config(config_path("condA_square"));
    ca.out_dir = tmp_dir("an_a");
    CHECK(cmd_analyze(ca, out) == 0);
    auto rot = load_config(config_path("rotation_annulus"));
    rot.out_dir = tmp_dir("an_b");
    CHECK(cmd_analyze(rot, out) == 2);
    CHECK(std::filesystem::exists(rot.out_dir + "/analyze.txt"));
}

TEST_CASE("graph exit codes follow the loop check") {
    std::ostringstream out;
    auto m2 = load_config(config_path("polar_m2"));
    m2.out_dir = tmp_dir("gr_m2");
    CHECK(cmd_graph(m2, out) == 0);
    CHECK(std::filesystem::exists(m2.out_dir + "/graph.txt"));

    auto m1 = load_config(config_path("polar_m1"));
    m1.out_dir = tmp_dir("gr_m1");
    std::ostringstream out1;
    CHECK(cmd_graph(m1, out1) == 2);
    CHECK(out1.str().find("closed loop") != std::string::npos);

    auto pot = load_config(config_path("potential_annulus"));
    pot.out_dir = tmp_dir("gr_pot");
    std::ostringstream out2;
    CHECK(cmd_graph(pot, out2) == 0);
    CHECK(out2.str().find("0 edges") != std::string::npos);
}

TEST_CASE("weights command writes the report") {
    std::ostringstream out;
    auto c = load_config(config_path("two_strip_square"));
    c.out_dir = tmp_dir("wt");
    CHECK(cmd_weights(c, out) == 0);
    std::string report = slurp(c.out_dir + "/weights.txt");
    CHECK(report.find("delta2") != std::string::npos);
    CHECK(report.find("s1") != std::string::npos);
}

TEST_CASE("verify on a reduced grid passes and writes csv") {
    auto c = small_two_strip(tmp_dir("vf"));
    std::ostringstream out;
    CHECK(cmd_verify(c, out) == 0);
    std::string csv = slurp(c.out_dir + "/verify.csv");
    CHECK(csv.rfind("s,id,", 0) == 0);
    CHECK(csv.find("PASS") != std::string::npos);
}

TEST_CASE("observability and inverse-source commands emit study csvs") {
    auto c = small_two_strip(tmp_dir("ob"));
    c.horizon = 3.0;          // beyond the exit time; mu stays negative for this weight
    c.grid_steps = 96;
    std::ostringstream out;
    int code = cmd_observability(c, out);
    CHECK(code == 0);  // NOT-APPLICABLE or PASS, never FAIL here
    CHECK(slurp(c.out_dir + "/observability.csv").find("C_obs") != std::string::npos);
    std::ostringstream out2;
    CHECK(cmd_inverse_source(c, out2) == 0);
    CHECK(slurp(c.out_dir + "/inverse_source.csv").find("C_src") != std::string::npos);
}

TEST_CASE("reconstruct writes the source grid and history") {
    auto c = small_two_strip(tmp_dir("rc"));
    c.rec_max_iters = 400;
    std::ostringstream out;
    CHECK(cmd_reconstruct(c, out) == 0);
    CHECK(slurp(c.out_dir + "/f_hat.csv").rfind("x,y,f", 0) == 0);
    CHECK(slurp(c.out_dir + "/residual_history.csv").rfind("iteration,objective", 0) == 0);
}

TEST_CASE("identical seeds produce byte-identical outputs") {
    auto run_once = [](const std::string& dir) {
        auto c = small_two_strip(dir);
        std::ostringstream out;
        REQUIRE(cmd_verify(c, out) == 0);
        std::ostringstream out2;
        REQUIRE(cmd_observability(c, out2) == 0);
        return slurp(dir + "/verify.csv") + "\x1e" + slurp(dir + "/observability.csv");
    };
    std::string a = run_once(tmp_dir("det_a"));
    std::string b = run_once(tmp_dir("det_b"));
    CHECK(a == b);
    auto c = small_two_strip(tmp_dir("det_c"));
    c.seed += 1;
    std::ostringstream out;
    REQUIRE(cmd_verify(c, out) == 0);
    CHECK(slurp(c.out_dir + "/verify.csv") != a.substr(0, a.find('\x1e')));
}
