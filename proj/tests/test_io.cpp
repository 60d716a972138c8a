#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gexpect/errors.hpp"
#include "gexpect/io.hpp"
#include "gexpect/test_functions.hpp"

using namespace gexpect;
namespace fs = std::filesystem;

namespace {

DiscreteUncertainDistribution example_b() {
    return DiscreteUncertainDistribution::scalar(
        {-1.0, 0.0, 1.0}, {{0.1, 0.8, 0.1}, {0.4, 0.2, 0.4}});
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gexpect_io_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("distribution JSON uses the exact field names and round-trips") {
    auto d = example_b();
    json j = to_json(d);
    CHECK(j.contains("dim"));
    CHECK(j.contains("support"));
    CHECK(j.contains("credal"));
    auto back = distribution_from_json(j);
    CHECK(back.dim() == d.dim());
    CHECK(back.support() == d.support());
    CHECK(back.credal() == d.credal());

    // parse from literal text, exactly as documented
    auto parsed = distribution_from_json(json::parse(
        R"({"dim": 1, "support": [[-1.0], [1.0]], "credal": [[0.5, 0.5]]})"));
    CHECK(parsed.support_size() == 2);
}

TEST_CASE("tree JSON: leaf and product nodes") {
    auto tree = product(CompositionTree::leaf(example_b()),
                        CompositionTree::leaf(example_b()));
    json j = to_json(tree);
    CHECK(j.contains("product"));
    auto back = tree_from_json(j);
    CHECK(back.total_dim() == 2);
    CHECK_FALSE(back.is_leaf());
    CHECK(back.left().is_leaf());

    CHECK_THROWS_AS(tree_from_json(json::parse(R"({"neither": 1})")), Error);
}

TEST_CASE("scenario-set JSON round-trips, beta optional") {
    SupportSetTheta theta(1,
                          {ScenarioPair{{1.0}, Matrix::scalar1x1(0.5)},
                           ScenarioPair{{2.0}, Matrix::scalar1x1(1.0)}},
                          0.25);
    json j = to_json(theta);
    CHECK(j.at("beta") == 0.25);
    auto back = theta_from_json(j);
    CHECK(back.dim() == 1);
    CHECK(back.pairs().size() == 2);
    CHECK(back.ellipticity_lower_bound() == 0.25);

    auto no_beta = theta_from_json(json::parse(
        R"({"dim": 1, "pairs": [{"q": [0.0], "Q": [[1.0]]}]})"));
    CHECK_FALSE(no_beta.ellipticity_lower_bound().has_value());
}

TEST_CASE("malformed payloads name the violated invariant") {
    CHECK_THROWS_WITH_AS(distribution_from_json(json::parse(
                             R"({"dim": 1, "support": [[-1.0],[1.0]], "credal": [[0.5, 0.4]]})")),
                         doctest::Contains("sums to"), Error);
    CHECK_THROWS_AS(distribution_from_json(json::parse(R"({"dim": 1})")), Error);
}

TEST_CASE("field CSV format and sidecar") {
    TempDir tmp;
    auto g = GFunction::from_support(
        SupportSetTheta(1, {ScenarioPair{{0.0}, Matrix::scalar1x1(1.0)}}));
    Grid grid = build_grid(g, 4.0, 0.5, 1.0, 1.0);
    auto f = solve(make_abs_clipped(3.0), g, 1.0, grid);
    fs::path out = tmp.path / "field.csv";
    write_field_csv(f, out);

    std::string csv = slurp(out);
    CHECK(csv.rfind("x,value\n", 0) == 0);
    CHECK_FALSE(fs::exists(tmp.path / "field.csv.tmp"));

    json side = json::parse(slurp(tmp.path / "field.json"));
    CHECK(side.at("t") == 1.0);
    CHECK(side.at("dx") == 0.5);
    CHECK(side.contains("dt"));
    CHECK(side.at("L") == 4.0);
    CHECK(side.at("boundary") == "frozen_initial");
    CHECK(side.contains("trunc_bound"));
}

TEST_CASE("field CSV in two dimensions") {
    TempDir tmp;
    auto g = GFunction::from_support(
        SupportSetTheta(1, {ScenarioPair{{0.0}, Matrix::scalar1x1(1.0)}}));
    Grid grid = build_grid(g, 4.0, 1.0, 1.0, 1.0, 2);
    auto f = sample_initial(make_quadratic_pair(2.0, 1.0), grid);
    fs::path out = tmp.path / "f2.csv";
    write_field_csv(f, out);
    auto text = slurp(out);
    CHECK(text.rfind("x,y,value\n", 0) == 0);
    // 9 x 9 nodes plus header
    CHECK(std::count(text.begin(), text.end(), '\n') == 82);
}

TEST_CASE("report CSV format and sidecar") {
    TempDir tmp;
    ConvergenceReport r;
    r.n_values = {2, 4};
    r.harness_values = {0.5, 0.25};
    r.pde_reference = 0.125;
    r.abs_errors = {0.375, 0.125};
    r.fitted_rate = 1.5;
    r.rate_constant = 0.7;
    r.moment_bound = 0.9;
    fs::path out = tmp.path / "report.csv";
    write_report_csv(r, out);

    std::string csv = slurp(out);
    CHECK(csv.rfind("n,harness,reference,abs_error\n", 0) == 0);
    CHECK(csv.find("2,0.5,0.125,0.375\n") != std::string::npos);

    json side = json::parse(slurp(tmp.path / "report.json"));
    CHECK(side.at("alpha_fit") == 1.5);
    CHECK(side.at("C") == 0.7);
    CHECK(side.at("moment_bound") == 0.9);
    CHECK(side.at("joint_mode") == "marginal_product");
}

TEST_CASE("writes are atomic: identical content on repeat, no temp residue") {
    TempDir tmp;
    fs::path out = tmp.path / "v.csv";
    write_value_csv(0.8, out, json{{"t", 1.0}});
    std::string first = slurp(out);
    write_value_csv(0.8, out, json{{"t", 1.0}});
    CHECK(slurp(out) == first);
    CHECK(first == "value\n0.8\n");
    for (const auto& entry : fs::directory_iterator(tmp.path))
        CHECK(entry.path().extension() != ".tmp");
}
