#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gexpect/errors.hpp"
#include "gexpect/pde.hpp"
#include "gexpect/test_functions.hpp"
#include "oracles.hpp"

using namespace gexpect;
using gexpect::testing::gauss_expect;

namespace {

ScenarioPair pair1(double q, double sigma) {
    return ScenarioPair{{q}, Matrix::scalar1x1(sigma)};
}

// pure variance uncertainty sigma^2 in {0.2, 0.8}, zero drift
GFunction g_volatility() {
    return GFunction::from_support(SupportSetTheta(
        1, {pair1(0.0, std::sqrt(0.2)), pair1(0.0, std::sqrt(0.8))}));
}

// q in {1, 2} x sigma^2 in {0.2, 0.8}
GFunction g_four_pair(Aggregation agg = Aggregation::kSup) {
    return GFunction::from_support(
        SupportSetTheta(1, {pair1(1.0, std::sqrt(0.2)), pair1(1.0, std::sqrt(0.8)),
                            pair1(2.0, std::sqrt(0.2)), pair1(2.0, std::sqrt(0.8))}),
        agg);
}

}  // namespace

TEST_CASE("build_grid: time step from the stability bound") {
    // sigma2_max = 0.8, q_max = 2, dx = 0.1 -> dt <= 1/(80 + 20)
    auto g = g_four_pair();
    Grid grid = build_grid(g, 6.0, 0.1, 1.0, 1.0);
    CHECK(grid.dt <= 0.01 + 1e-15);
    CHECK(std::abs(grid.t_final / grid.dt - std::round(grid.t_final / grid.dt)) < 1e-9);

    auto g1 = GFunction::from_support(SupportSetTheta(1, {pair1(0.0, 1.0)}));
    Grid grid2 = build_grid(g1, 6.0, 0.1, 1.0, 0.5);
    CHECK(grid2.dt <= 0.005 + 1e-15);

    // degenerate G == 0: any dt is stable, solution constant in time
    auto g0 = GFunction::from_support(SupportSetTheta(1, {pair1(0.0, 0.0)}));
    Grid grid3 = build_grid(g0, 1.0, 0.1, 1.0, 1.0);
    CHECK(grid3.dt == doctest::Approx(1.0));
    auto f = solve(make_polyline({{-1.0, 0.2}, {0.0, 0.9}, {1.0, -0.4}}), g0, 1.0, grid3);
    auto f0 = sample_initial(make_polyline({{-1.0, 0.2}, {0.0, 0.9}, {1.0, -0.4}}), grid3);
    for (size_t i = 0; i < f.values.size(); ++i) CHECK(f.values[i] == f0.values[i]);
}

TEST_CASE("build_grid: domain must contain the diffusion/transport cone") {
    auto g = g_four_pair();
    // cone = 3 sqrt(0.8) + 2 = 4.683...
    CHECK_THROWS_WITH_AS(build_grid(g, 3.0, 0.1, 1.0, 1.0), doctest::Contains("cone"),
                         Error);
}

TEST_CASE("constants are preserved exactly") {
    auto g = g_four_pair();
    Grid grid = build_grid(g, 6.0, 0.1, 0.5, 1.0);
    for (auto bm : {BoundaryMode::kFrozenInitial, BoundaryMode::kLinearExtrapolation}) {
        auto f = solve(make_constant(3.25), g, 0.5, grid, bm);
        for (double v : f.values) CHECK(v == 3.25);
    }
    Grid grid2 = build_grid(g, 6.0, 0.2, 0.5, 1.0, 2);
    auto f2 = solve_full(make_constant(-1.5), g, 0.5, grid2);
    for (double v : f2.values) CHECK(v == -1.5);
}

TEST_CASE("a single explicit step applies dt times the aggregated Hamiltonian") {
    auto g = g_volatility();
    Grid grid = build_grid(g, 6.0, 0.1, 1.0, 1.0);
    // constant data: the step is an exact no-op
    auto c0 = sample_initial(make_constant(2.0), grid);
    auto c1 = step(c0, g);
    CHECK(c1.time == doctest::Approx(grid.dt));
    for (double v : c1.values) CHECK(v == 2.0);
    // quadratic data: the centre gains dt * Ghat(2) per step (the central
    // second difference of x^2 is exact)
    auto q0 = sample_initial(make_quadratic(2.0, 0.0), grid);
    auto q1 = step(q0, g);
    CHECK(q1.center_value() == doctest::Approx(grid.dt * 0.8).epsilon(1e-12));
    auto q2 = step(q1, g);
    CHECK(q2.center_value() == doctest::Approx(2.0 * grid.dt * 0.8).epsilon(1e-12));
}

TEST_CASE("quadratic initial data grows linearly at the worst-case rate") {
    auto g = g_volatility();
    Grid grid = build_grid(g, 6.0, 0.05, 1.0, 1.0);
    double up = gdist_expect(make_quadratic(2.0, 0.0), g, grid);
    CHECK(up == doctest::Approx(0.8).epsilon(2e-6));
    double dn = gdist_expect(make_quadratic(-2.0, 0.0), g, grid);
    CHECK(dn == doctest::Approx(-0.2).epsilon(2e-6));
}

TEST_CASE("pure transport picks the worst drift") {
    auto g = GFunction::from_support(
        SupportSetTheta(1, {pair1(1.0, 0.0), pair1(2.0, 0.0)}));
    Grid grid = build_grid(g, 6.0, 0.05, 1.0, 1.0);
    TestFunction ident;
    ident.arity = 1;
    ident.lipschitz_bound = 1.0;
    ident.evaluator = [](std::span<const double> v) { return v[0]; };
    auto f = solve(ident, g, 1.0, grid);
    // one-sided differences are exact on linear data: v(1, 0) = 0 + sup(q) * 1
    CHECK(f.center_value() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("single scenario reduces to the classical heat evolution") {
    auto g = GFunction::from_support(SupportSetTheta(1, {pair1(0.0, 1.0)}));
    Grid grid = build_grid(g, 6.0, 0.02, 1.0, 1.0);
    double v = gdist_expect(make_abs_clipped(5.0), g, grid);
    double ref = gauss_expect(1.0, make_abs_clipped(5.0));
    CHECK(v == doctest::Approx(ref).epsilon(5e-3));
    double vq = gdist_expect(make_quadratic(2.0, 0.0), g, grid);
    CHECK(vq == doctest::Approx(1.0).epsilon(2e-6));
}

TEST_CASE("worst-case absolute moment under variance uncertainty") {
    // |x| is convex, so the evolution saturates the upper variance: the limit
    // equals the classical Gaussian value at sigma_up
    auto g = g_volatility();
    Grid grid = build_grid(g, 6.0, 0.02, 1.0, 1.0);
    double v = gdist_expect(make_abs_clipped(5.0), g, grid);
    double ref = gauss_expect(std::sqrt(0.8), make_abs_clipped(5.0));
    CHECK(ref == doctest::Approx(std::sqrt(0.8) * std::sqrt(2.0 / M_PI)).epsilon(1e-6));
    CHECK(v == doctest::Approx(0.71365).epsilon(5e-3 / 0.71365));
}

TEST_CASE("full form: quadratic data recovers G(p, A) at the centre") {
    auto g = g_four_pair();
    Grid grid = build_grid(g, 6.0, 0.05, 1.0, 1.0, 2);
    for (double a : {2.0, -2.0}) {
        for (double p : {0.0, 1.0, -1.0}) {
            auto f = solve_full(make_quadratic_pair(a, p), g, 1.0, grid);
            CHECK(f.center_value() == doctest::Approx(g.eval(p, a)).epsilon(1e-6));
        }
    }
}

TEST_CASE("full form: x-marginal symmetry of the centre value") {
    auto g = g_volatility();
    Grid grid = build_grid(g, 5.0, 0.05, 1.0, 1.0, 2);
    TestFunction phi;
    phi.arity = 2;
    phi.bounded = true;
    phi.lipschitz_bound = 2.0;
    phi.evaluator = [](std::span<const double> v) {
        return std::min(std::max(v[0], 0.0), 2.0) + 0.3 * std::min(std::abs(v[1]), 2.0);
    };
    TestFunction mirrored;
    mirrored.arity = 2;
    mirrored.bounded = true;
    mirrored.lipschitz_bound = 2.0;
    mirrored.evaluator = [e = phi.evaluator](std::span<const double> v) {
        double w[2] = {-v[0], v[1]};
        return e(std::span<const double>(w, 2));
    };
    auto f1 = solve_full(phi, g, 1.0, grid);
    auto f2 = solve_full(mirrored, g, 1.0, grid);
    CHECK(f1.center_value() == doctest::Approx(f2.center_value()).epsilon(1e-3));
}

TEST_CASE("reduction identity: the full form solves the one-variable flow") {
    auto g = g_four_pair();
    double dx = 0.1;
    Grid grid2 = build_grid(g, 5.0, dx, 1.0, 1.0, 2);
    Grid grid1 = grid2;
    grid1.spatial_dim = 1;
    grid1.x_min = 2 * grid2.x_min;
    grid1.x_max = 2 * grid2.x_max;

    TestFunction psi = make_abs_clipped(4.0);
    auto u = solve_full(compose_sum_reduction(psi), g, 1.0, grid2);
    auto v = solve(psi, g, 1.0, grid1);

    int n2 = grid2.nodes_per_axis();
    double umin = 1e300, umax = -1e300;
    for (double val : u.values) {
        umin = std::min(umin, val);
        umax = std::max(umax, val);
    }
    double tol = 2.0 * (grid2.dx + grid2.dt) * (umax - umin);
    // compare away from the frame, where the frozen boundaries differ
    double worst = 0.0;
    int quarter = n2 / 4;
    for (int i = quarter; i < n2 - quarter; ++i)
        for (int j = quarter; j < n2 - quarter; ++j)
            worst = std::max(worst, std::abs(u.at(i, j) - v.at(i + j)));
    CHECK(worst <= tol);
}

TEST_CASE("semigroup: chained solves match a single solve bitwise") {
    auto g = g_four_pair();
    Grid grid = build_grid(g, 6.0, 0.1, 1.0, 1.0);
    TestFunction phi = make_polyline({{-6.0, 0.0}, {-1.0, 1.0}, {2.0, -0.5}, {6.0, 0.3}});
    auto whole = solve(phi, g, 1.0, grid);
    int k = grid.total_steps() / 3;
    auto part = continue_solve(solve(phi, g, k * grid.dt, grid), g,
                               (grid.total_steps() - k) * grid.dt);
    REQUIRE(whole.values.size() == part.values.size());
    for (size_t i = 0; i < whole.values.size(); ++i)
        CHECK(whole.values[i] == part.values[i]);
}

TEST_CASE("discrete property suite has no failures") {
    SupportSetTheta theta(1, {pair1(1.0, std::sqrt(0.2)), pair1(1.0, std::sqrt(0.8)),
                              pair1(2.0, std::sqrt(0.2)), pair1(2.0, std::sqrt(0.8))});
    auto g = GFunction::from_support(theta);
    Grid grid = build_grid(g, 4.9, 0.1, 0.25, 1.0);
    auto result = run_property_suite(theta, grid, 10, 424242);
    for (const auto& c : result.checks) {
        INFO(c.name, " witness: ", c.witness);
        CHECK(c.failures == 0);
        CHECK(c.checks > 0);
    }
}

TEST_CASE("grid refinement tightens the answer at first order") {
    auto g = g_volatility();
    TestFunction phi = make_abs_clipped(5.0);
    double coarse = gdist_expect(phi, g, build_grid(g, 6.0, 0.08, 1.0, 1.0));
    double mid = gdist_expect(phi, g, build_grid(g, 6.0, 0.04, 1.0, 1.0));
    double fine = gdist_expect(phi, g, build_grid(g, 6.0, 0.02, 1.0, 1.0));
    double d1 = std::abs(coarse - mid);
    double d2 = std::abs(mid - fine);
    CHECK(d1 >= 1.5 * d2);
}

TEST_CASE("stability violations blow up and are reported") {
    auto g = g_volatility();
    Grid bad;
    bad.spatial_dim = 1;
    bad.x_min = -2.0;
    bad.x_max = 2.0;
    bad.dx = 0.05;
    bad.dt = 0.05;  // far above the stability bound 1/(0.8/0.0025)
    bad.t_final = 50.0;
    CHECK_THROWS_AS(bad.validate(0.8, 0.0), Error);
    // drive the unstable update directly
    auto f = sample_initial(make_abs_clipped(5.0), bad);
    CHECK_THROWS_WITH_AS(continue_solve(f, g, 50.0), doctest::Contains("blow-up"), Error);
}

TEST_CASE("time arguments must land on the step lattice") {
    auto g = g_volatility();
    Grid grid = build_grid(g, 6.0, 0.1, 1.0, 1.0);
    CHECK_THROWS_AS(solve(make_abs_clipped(5.0), g, 0.5 * grid.dt, grid), Error);
    CHECK_THROWS_AS(solve(make_abs_clipped(5.0), g, 2.0, grid), Error);
}

TEST_CASE("configuration errors") {
    auto g = g_volatility();
    CHECK_THROWS_AS(build_grid(g, 6.0, 0.1, 1.0, 0.0), Error);   // safety out of (0, 1]
    CHECK_THROWS_AS(build_grid(g, 6.0, 0.1, 1.0, 1.5), Error);
    CHECK_THROWS_AS(build_grid(g, 6.0, -0.1, 1.0, 1.0), Error);  // negative spacing
    Grid short_grid = build_grid(g, 6.0, 0.1, 0.5, 1.0);
    CHECK_THROWS_AS(gdist_expect(make_abs_clipped(5.0), g, short_grid), Error);
}

TEST_CASE("truncation banner is reported and shrinks with the domain") {
    auto g = g_volatility();
    auto f1 = solve(make_abs_clipped(5.0), g, 1.0, build_grid(g, 5.0, 0.1, 1.0, 1.0));
    auto f2 = solve(make_abs_clipped(5.0), g, 1.0, build_grid(g, 8.0, 0.1, 1.0, 1.0));
    CHECK(f1.truncation_error_bound > 0.0);
    CHECK(f2.truncation_error_bound < f1.truncation_error_bound);
    CHECK(f1.truncation_error_bound <= 1.0);
}
