// End-to-end checks of the gexpect binary: exit codes, CSV contracts,
// determinism. The binary path comes from the build via GEXPECT_BIN.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gexpect_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(GEXPECT_BIN) + " " + args + " >" + log.string() +
                      " 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write(const fs::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2);
}

json volatility_theta() {
    return json{{"dim", 1},
                {"pairs", json::array({json{{"q", {0.0}}, {"Q", {{0.4472135954999579}}}},
                                       json{{"q", {0.0}}, {"Q", {{0.8944271909999159}}}}})}};
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("gdist: quadratic on variance uncertainty returns the upper variance") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"command", "gdist"},
             {"g", volatility_theta()},
             {"grid", json{{"L", 6.0}, {"dx", 0.05}, {"form", "full"}}},
             {"phi", "quad:2:0"},
             {"output_path", (tmp.path / "out.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    int rc = run("gdist --config " + (tmp.path / "cfg.json").string(),
                 tmp.path / "log.txt");
    REQUIRE(rc == 0);
    auto lines = csv_lines(slurp(tmp.path / "out.csv"));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "value");
    CHECK(std::stod(lines[1]) == doctest::Approx(0.8).epsilon(1e-4));
    json side = json::parse(slurp(tmp.path / "out.json"));
    CHECK(side.contains("trunc_bound"));
}

TEST_CASE("lln: hand-recursion rows for the (0,3) example") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"distribution_y",
              json{{"dim", 1},
                   {"support", {{0.0}, {3.0}}},
                   {"credal", {{2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}}}}},
             {"n_list", {1, 2}},
             {"output_path", (tmp.path / "lln.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    int rc = run("lln --config " + (tmp.path / "cfg.json").string(), tmp.path / "log.txt");
    REQUIRE(rc == 0);
    auto lines = csv_lines(slurp(tmp.path / "lln.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "n,harness,reference,abs_error");
    {
        std::stringstream ss(lines[1]);
        std::string cell;
        std::getline(ss, cell, ',');
        CHECK(cell == "1");
        std::getline(ss, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-12));
        std::getline(ss, cell, ',');
        CHECK(std::stod(cell) == 0.0);
        std::getline(ss, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        std::stringstream ss(lines[2]);
        std::string cell;
        std::getline(ss, cell, ',');
        CHECK(cell == "2");
        std::getline(ss, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    }
}

TEST_CASE("validation failures exit 2 and cite the invariant") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"distribution_y",
              json{{"dim", 1}, {"support", {{0.0}, {3.0}}}, {"credal", {{0.5, 0.4}}}}},
             {"n_list", {1}},
             {"output_path", (tmp.path / "x.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    int rc = run("lln --config " + (tmp.path / "cfg.json").string(), tmp.path / "log.txt");
    CHECK(rc == 2);
    std::string log = slurp(tmp.path / "log.txt");
    CHECK(log.find("sums to") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "x.csv"));

    // missing config file
    CHECK(run("gdist --config /nonexistent.json", tmp.path / "log2.txt") == 2);
    // command mismatch between argv and config
    json cfg2{{"schema", 1}, {"command", "lln"}, {"g", volatility_theta()}};
    write(tmp.path / "cfg2.json", cfg2);
    CHECK(run("gdist --config " + (tmp.path / "cfg2.json").string(),
              tmp.path / "log3.txt") == 2);
}

TEST_CASE("props: classical scenario passes every property, deterministically") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"g", json{{"dim", 1},
                        {"pairs", json::array({json{{"q", {0.0}}, {"Q", {{1.0}}}}})}}},
             {"grid", json{{"L", 3.0}, {"dx", 0.25}, {"t", 0.25}}},
             {"props", json{{"count", 5}}},
             {"output_path", (tmp.path / "props.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    std::string base = "props --config " + (tmp.path / "cfg.json").string();
    REQUIRE(run(base + " --seed 42", tmp.path / "log.txt") == 0);
    std::string first = slurp(tmp.path / "props.csv");
    CHECK(first.rfind("property,checks,failures\n", 0) == 0);
    CHECK(first.find("comparison") != std::string::npos);
    CHECK(first.find("concavity_inf_form") != std::string::npos);

    REQUIRE(run(base + " --seed 42", tmp.path / "log.txt") == 0);
    CHECK(slurp(tmp.path / "props.csv") == first);  // byte-identical on same seed
}

TEST_CASE("clt: quadratic study via the CLI") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"distribution_x",
              json{{"dim", 1},
                   {"support", {{-1.0}, {0.0}, {1.0}}},
                   {"credal", {{0.1, 0.8, 0.1}, {0.4, 0.2, 0.4}}}}},
             {"grid", json{{"L", 6.0}, {"dx", 0.1}}},
             {"n_list", {1, 2, 4}},
             {"phi", "quad:2:0"},
             {"output_path", (tmp.path / "clt.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    REQUIRE(run("clt --config " + (tmp.path / "cfg.json").string(),
                tmp.path / "log.txt") == 0);
    auto lines = csv_lines(slurp(tmp.path / "clt.csv"));
    REQUIRE(lines.size() == 4);
    for (size_t i = 1; i < lines.size(); ++i) {
        std::stringstream ss(lines[i]);
        std::string n, harness;
        std::getline(ss, n, ',');
        std::getline(ss, harness, ',');
        CHECK(std::stod(harness) == doctest::Approx(0.8).epsilon(1e-10));
    }
    json side = json::parse(slurp(tmp.path / "clt.json"));
    CHECK(side.at("joint_mode") == "marginal_product");
    CHECK(side.at("moment_bound") == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("state budget overruns exit 4") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"distribution_x",
              json{{"dim", 1},
                   {"support", {{-1.0}, {0.0}, {1.0}}},
                   {"credal", {{0.1, 0.8, 0.1}, {0.4, 0.2, 0.4}}}}},
             {"grid", json{{"L", 6.0}, {"dx", 0.1}}},
             {"n_list", {64}},
             {"budget", 3},
             {"phi", "abs_clipped:5"},
             {"output_path", (tmp.path / "clt.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    int rc = run("clt --config " + (tmp.path / "cfg.json").string(), tmp.path / "log.txt");
    CHECK(rc == 4);
    CHECK(slurp(tmp.path / "log.txt").find("budget") != std::string::npos);
}

TEST_CASE("solve: field output with the documented header") {
    TempDir tmp;
    json cfg{{"schema", 1},
             {"g", volatility_theta()},
             {"grid", json{{"L", 5.0}, {"dx", 0.5}, {"t", 1.0}}},
             {"phi", "abs_clipped:4"},
             {"output_path", (tmp.path / "f.csv").string()}};
    write(tmp.path / "cfg.json", cfg);
    REQUIRE(run("solve --config " + (tmp.path / "cfg.json").string(),
                tmp.path / "log.txt") == 0);
    auto lines = csv_lines(slurp(tmp.path / "f.csv"));
    CHECK(lines[0] == "x,value");
    CHECK(lines.size() == 22);  // 21 nodes + header

    // --out override
    REQUIRE(run("solve --config " + (tmp.path / "cfg.json").string() + " --out " +
                    (tmp.path / "g.csv").string(),
                tmp.path / "log.txt") == 0);
    CHECK(fs::exists(tmp.path / "g.csv"));
}
