#include "gexpect/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "gexpect/errors.hpp"
#include "gexpect/test_functions.hpp"

namespace gexpect {

namespace {

bool near_integer(double v, double tol = 1e-9) {
    return std::abs(v - std::round(v)) <= tol * std::max(1.0, std::abs(v));
}

// Per-scenario stencil coefficients for d = 1:
//   candidate = a * (v[i+1] - 2 v[i] + v[i-1]) + bf * (v[i+1] - v[i]) + bb * (v[i] - v[i-1])
// with a = sigma^2/(2 dx^2), bf = max(q,0)/dx, bb = min(q,0)/dx. Exactly one
// of the transport terms is active per scenario; the other coefficient is 0.
struct SchemeCoefficients {
    std::vector<double> a, bf, bb;
    bool sup = true;
    size_t count() const { return a.size(); }
};

SchemeCoefficients make_coefficients(const GFunction& g, double dx) {
    if (g.dim() != 1)
        throw_validation("the finite-difference solver supports d = 1 scenario sets");
    SchemeCoefficients c;
    c.sup = (g.aggregation() == Aggregation::kSup);
    for (const auto& pr : g.scenarios().pairs()) {
        double sigma2 = pr.cov_factor(0, 0) * pr.cov_factor(0, 0);
        double q = pr.mean[0];
        c.a.push_back(0.5 * sigma2 / (dx * dx));
        c.bf.push_back(std::max(q, 0.0) / dx);
        c.bb.push_back(std::min(q, 0.0) / dx);
    }
    return c;
}

// Scratch rows shared by the stepping kernels; sized to one grid row.
struct StepScratch {
    std::vector<double> acc, d2, fwd;
    explicit StepScratch(int n) : acc(n), d2(n), fwd(n + 1) {}
};

// Update of one contiguous segment of interior nodes. `v` is the full value
// array; for every j in [lo, hi) the diffusion second difference reads with
// stride `sd` (1 on the 1-D axis, one row in 2-D) and the transport
// differences read the adjacent entries of the same row. The differences are
// hoisted into scratch rows once, so each scenario pass is a single
// fused-multiply-add plus the running max/min.
template <bool Sup>
void update_segment(const double* v, double* out, StepScratch& s, long lo, long hi,
                    long sd, const SchemeCoefficients& c, double dt) {
    double* acc = s.acc.data();
    double* d2 = s.d2.data();
    double* fwd = s.fwd.data();
    for (long j = lo; j < hi; ++j) d2[j - lo] = v[j - sd] + v[j + sd] - 2.0 * v[j];
    for (long j = lo - 1; j < hi; ++j) fwd[j - lo + 1] = v[j + 1] - v[j];
    // fwd[i+1] holds v[lo+i+1]-v[lo+i]; the backward difference at node lo+i
    // is fwd[i].
    {
        const double a = c.a[0], bf = c.bf[0], bb = c.bb[0];
        for (long i = 0; i < hi - lo; ++i)
            acc[i] = a * d2[i] + bf * fwd[i + 1] + bb * fwd[i];
    }
    for (size_t k = 1; k < c.count(); ++k) {
        const double a = c.a[k], bf = c.bf[k], bb = c.bb[k];
        for (long i = 0; i < hi - lo; ++i) {
            double cand = a * d2[i] + bf * fwd[i + 1] + bb * fwd[i];
            acc[i] = Sup ? std::max(acc[i], cand) : std::min(acc[i], cand);
        }
    }
    for (long i = 0; i < hi - lo; ++i) out[lo + i] = v[lo + i] + dt * acc[i];
}

void step_1d(const std::vector<double>& cur, std::vector<double>& next,
             const SchemeCoefficients& c, double dt, BoundaryMode bm,
             StepScratch& scratch) {
    int n = static_cast<int>(cur.size());
    if (c.sup)
        update_segment<true>(cur.data(), next.data(), scratch, 1, n - 1, 1, c, dt);
    else
        update_segment<false>(cur.data(), next.data(), scratch, 1, n - 1, 1, c, dt);
    if (bm == BoundaryMode::kFrozenInitial) {
        next[0] = cur[0];
        next[n - 1] = cur[n - 1];
    } else {
        next[0] = 2.0 * next[1] - next[2];
        next[n - 1] = 2.0 * next[n - 2] - next[n - 3];
    }
}

void step_2d(const std::vector<double>& cur, std::vector<double>& next, int n,
             const SchemeCoefficients& c, double dt, BoundaryMode bm,
             StepScratch& scratch) {
    for (int ix = 1; ix < n - 1; ++ix) {
        long base = static_cast<long>(ix) * n;
        if (c.sup)
            update_segment<true>(cur.data(), next.data(), scratch, base + 1,
                                 base + n - 1, n, c, dt);
        else
            update_segment<false>(cur.data(), next.data(), scratch, base + 1,
                                  base + n - 1, n, c, dt);
    }
    if (bm == BoundaryMode::kFrozenInitial) {
        // frame rows/columns keep their previous (initial) values
        std::memcpy(next.data(), cur.data(), sizeof(double) * n);
        std::memcpy(next.data() + static_cast<size_t>(n - 1) * n,
                    cur.data() + static_cast<size_t>(n - 1) * n, sizeof(double) * n);
        for (int ix = 1; ix < n - 1; ++ix) {
            next[static_cast<size_t>(ix) * n] = cur[static_cast<size_t>(ix) * n];
            next[static_cast<size_t>(ix) * n + n - 1] = cur[static_cast<size_t>(ix) * n + n - 1];
        }
    } else {
        auto v = [&](int i, int j) -> double& { return next[static_cast<size_t>(i) * n + j]; };
        for (int j = 1; j < n - 1; ++j) {
            v(0, j) = 2.0 * v(1, j) - v(2, j);
            v(n - 1, j) = 2.0 * v(n - 2, j) - v(n - 3, j);
        }
        for (int i = 0; i < n; ++i) {
            v(i, 0) = 2.0 * v(i, 1) - v(i, 2);
            v(i, n - 1) = 2.0 * v(i, n - 2) - v(i, n - 3);
        }
    }
}

void check_finite(const std::vector<double>& values, double time) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "numerical blow-up: non-finite value at t=" << time
               << " (stability bound violated?)";
            throw_numerical(os.str());
        }
    }
}

double truncation_banner(double lip, double sigma2_max, double q_max, double halfwidth,
                         double t) {
    if (t <= 0.0) return 0.0;
    double cone = 3.0 * std::sqrt(sigma2_max * t) + q_max * t;
    double margin = halfwidth - cone;
    if (sigma2_max <= 0.0) return margin > 0.0 ? 0.0 : lip;
    if (margin <= 0.0) return lip;
    return lip * std::exp(-margin * margin / (2.0 * sigma2_max * t));
}

}  // namespace

int Grid::nodes_per_axis() const {
    return static_cast<int>(std::llround((x_max - x_min) / dx)) + 1;
}

int Grid::total_steps() const { return static_cast<int>(std::llround(t_final / dt)); }

void Grid::validate(double sigma2_max, double q_max) const {
    if (spatial_dim != 1 && spatial_dim != 2)
        throw_config("grid spatial_dim must be 1 or 2");
    if (!(dx > 0.0) || !(dt > 0.0) || !(t_final > 0.0) || !(x_max > x_min))
        throw_config("grid extents and steps must be positive");
    double cells = (x_max - x_min) / dx;
    if (!near_integer(cells) || std::llround(cells) < 8)
        throw_config("(x_max - x_min)/dx must be an integer >= 8");
    if (!near_integer(t_final / dt))
        throw_config("t_final/dt must be an integer");
    double denom = sigma2_max / (dx * dx) + q_max / dx;
    if (denom > 0.0 && dt > (1.0 + 1e-9) / denom) {
        std::ostringstream os;
        os << "stability bound violated: dt=" << dt << " exceeds 1/(sigma2/dx^2+q/dx)="
           << 1.0 / denom;
        throw_config(os.str());
    }
}

Grid build_grid(const GFunction& g, double domain_halfwidth, double dx, double t_final,
                double safety, int spatial_dim) {
    if (!(domain_halfwidth > 0.0) || !(dx > 0.0) || !(t_final > 0.0))
        throw_config("build_grid requires positive halfwidth, dx and t_final");
    if (!(safety > 0.0) || safety > 1.0)
        throw_config("build_grid safety factor must lie in (0, 1]");

    double sigma2_max = g.scenarios().sigma2_max();
    double q_max = g.scenarios().q_max();
    double cone = 3.0 * std::sqrt(sigma2_max * t_final) + q_max * t_final;
    if (domain_halfwidth < cone) {
        std::ostringstream os;
        os << "domain halfwidth " << domain_halfwidth
           << " too small for the diffusion/transport cone; need L >= " << cone;
        throw_config(os.str());
    }

    int half_cells = static_cast<int>(std::ceil(domain_halfwidth / dx - 1e-9));
    half_cells = std::max(half_cells, 4);
    double halfwidth = half_cells * dx;

    Grid grid;
    grid.spatial_dim = spatial_dim;
    grid.x_min = -halfwidth;
    grid.x_max = halfwidth;
    grid.dx = dx;
    grid.t_final = t_final;

    double denom = sigma2_max / (dx * dx) + q_max / dx;
    if (denom <= 0.0) {
        grid.dt = t_final;  // G == 0: solution is constant in time, one step
    } else {
        double dt_max = safety / denom;
        int steps = static_cast<int>(std::ceil(t_final / dt_max - 1e-12));
        grid.dt = t_final / steps;
    }
    grid.validate(sigma2_max, q_max);
    return grid;
}

double SolutionField::center_value() const {
    int n = grid.nodes_per_axis();
    double pos = -grid.x_min / grid.dx;
    if (!near_integer(pos, 1e-9))
        throw_config("grid has no node at the origin");
    int c = static_cast<int>(std::llround(pos));
    if (grid.spatial_dim == 1) return values[c];
    return values[static_cast<size_t>(c) * n + c];
}

SolutionField sample_initial(const TestFunction& phi, const Grid& grid, BoundaryMode bm) {
    SolutionField f;
    f.grid = grid;
    f.boundary_mode = bm;
    f.initial_lipschitz = phi.lipschitz_bound.value_or(1.0);
    int n = grid.nodes_per_axis();
    if (grid.spatial_dim == 1) {
        f.values.resize(n);
        for (int i = 0; i < n; ++i) f.values[i] = phi(grid.node(i));
    } else {
        f.values.resize(static_cast<size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                f.values[static_cast<size_t>(i) * n + j] = phi(grid.node(i), grid.node(j));
    }
    check_finite(f.values, 0.0);
    return f;
}

SolutionField step(const SolutionField& field, const GFunction& g) {
    SolutionField out = field;
    SchemeCoefficients c = make_coefficients(g, field.grid.dx);
    int n = field.grid.nodes_per_axis();
    StepScratch scratch(n);
    if (field.grid.spatial_dim == 1)
        step_1d(field.values, out.values, c, field.grid.dt, field.boundary_mode, scratch);
    else
        step_2d(field.values, out.values, n, c, field.grid.dt, field.boundary_mode, scratch);
    out.time = field.time + field.grid.dt;
    check_finite(out.values, out.time);
    out.truncation_error_bound =
        truncation_banner(out.initial_lipschitz, g.scenarios().sigma2_max(),
                          g.scenarios().q_max(), std::min(-field.grid.x_min, field.grid.x_max),
                          out.time);
    return out;
}

SolutionField continue_solve(SolutionField field, const GFunction& g, double duration) {
    const Grid& grid = field.grid;
    double steps_exact = duration / grid.dt;
    if (!near_integer(steps_exact))
        throw_config("solve duration must be an integral number of time steps");
    int steps = static_cast<int>(std::llround(steps_exact));
    if (field.time + duration > grid.t_final + 1e-9 * std::max(1.0, grid.t_final))
        throw_config("solve duration exceeds grid t_final");

    SchemeCoefficients c = make_coefficients(g, grid.dx);
    int n = grid.nodes_per_axis();
    std::vector<double> buffer(field.values.size());
    StepScratch scratch(n);

    std::vector<double>* cur = &field.values;
    std::vector<double>* next = &buffer;
    constexpr int kCheckInterval = 64;
    for (int s = 0; s < steps; ++s) {
        if (grid.spatial_dim == 1)
            step_1d(*cur, *next, c, grid.dt, field.boundary_mode, scratch);
        else
            step_2d(*cur, *next, n, c, grid.dt, field.boundary_mode, scratch);
        std::swap(cur, next);
        if ((s + 1) % kCheckInterval == 0)
            check_finite(*cur, field.time + (s + 1) * grid.dt);
    }
    if (cur != &field.values) field.values = std::move(*cur);
    field.time += duration;
    check_finite(field.values, field.time);
    field.truncation_error_bound =
        truncation_banner(field.initial_lipschitz, g.scenarios().sigma2_max(),
                          g.scenarios().q_max(), std::min(-grid.x_min, grid.x_max), field.time);
    return field;
}

SolutionField solve(const TestFunction& phi, const GFunction& g, double t, const Grid& grid,
                    BoundaryMode bm) {
    if (grid.spatial_dim != 1)
        throw_config("solve expects a 1-D grid; use solve_full for the (x, y) form");
    grid.validate(g.scenarios().sigma2_max(), g.scenarios().q_max());
    if (t > grid.t_final + 1e-9) throw_config("requested time exceeds grid t_final");
    return continue_solve(sample_initial(phi, grid, bm), g, t);
}

SolutionField solve_full(const TestFunction& phi, const GFunction& g, double t,
                         const Grid& grid, BoundaryMode bm) {
    if (grid.spatial_dim != 2)
        throw_config("solve_full expects a 2-D grid");
    grid.validate(g.scenarios().sigma2_max(), g.scenarios().q_max());
    if (t > grid.t_final + 1e-9) throw_config("requested time exceeds grid t_final");
    return continue_solve(sample_initial(phi, grid, bm), g, t);
}

double gdist_expect(const TestFunction& phi, const GFunction& g, const Grid& grid,
                    BoundaryMode bm) {
    if (grid.t_final < 1.0 - 1e-12)
        throw_config("gdist_expect requires t_final >= 1");
    SolutionField f = grid.spatial_dim == 1 ? solve(phi, g, 1.0, grid, bm)
                                            : solve_full(phi, g, 1.0, grid, bm);
    return f.center_value();
}

bool PropertySuiteResult::all_pass() const {
    for (const auto& c : checks)
        if (c.failures > 0) return false;
    return true;
}

namespace {

std::string describe_polyline(const TestFunction&) { return "random polyline"; }

// Walks two (or three) fields in lockstep and applies `cmp` at every time
// level, recording the first failing node.
template <typename Cmp>
void lockstep_compare(std::vector<SolutionField> fields, const GFunction& g, int steps,
                      PropertyCheck& check, Cmp cmp, const std::string& data_desc) {
    for (int level = 1; level <= steps; ++level) {
        for (auto& f : fields) f = step(f, g);
        ++check.checks;
        for (size_t node = 0; node < fields[0].values.size(); ++node) {
            if (!cmp(fields, node)) {
                ++check.failures;
                if (check.witness.empty()) {
                    std::ostringstream os;
                    os.precision(17);
                    os << data_desc << ", node " << node << ", time level " << level;
                    check.witness = os.str();
                }
                break;
            }
        }
    }
}

}  // namespace

PropertySuiteResult run_property_suite(const SupportSetTheta& theta, const Grid& grid,
                                       int num_conditions, uint64_t seed) {
    GFunction g_sup = GFunction::from_support(theta, Aggregation::kSup);
    GFunction g_inf = GFunction::from_support(theta, Aggregation::kInf);
    grid.validate(theta.sigma2_max(), theta.q_max());
    if (grid.spatial_dim != 1)
        throw_config("property suite runs on the reduced (1-D) form");

    std::mt19937_64 rng(seed);
    int steps = grid.total_steps();

    PropertyCheck comparison{.name = "comparison"};
    PropertyCheck subadd{.name = "sub_additivity"};
    PropertyCheck homog{.name = "positive_homogeneity"};
    PropertyCheck constants{.name = "constants"};
    PropertyCheck semigroup{.name = "semigroup"};
    PropertyCheck concavity{.name = "concavity_inf_form"};

    const double node_tol = 1e-10;
    const double rel_tol = 1e-12;

    for (int cond = 0; cond < num_conditions; ++cond) {
        TestFunction phi = random_polyline(rng, grid.x_min, grid.x_max, 8, -1.0, 1.0);
        TestFunction psi = random_polyline(rng, grid.x_min, grid.x_max, 8, -1.0, 1.0);
        TestFunction bump = random_nonnegative_polyline(rng, grid.x_min, grid.x_max, 6, 1.0);
        std::string desc = "condition " + std::to_string(cond);

        // comparison: phi <= phi + bump propagates exactly
        lockstep_compare(
            {sample_initial(phi, grid), sample_initial(combine_linear(1, phi, 1, bump), grid)},
            g_sup, steps, comparison,
            [](const std::vector<SolutionField>& f, size_t i) {
                return f[0].values[i] <= f[1].values[i];
            },
            desc);

        // sub-additivity: solve(phi+psi) <= solve(phi) + solve(psi)
        lockstep_compare(
            {sample_initial(combine_linear(1, phi, 1, psi), grid), sample_initial(phi, grid),
             sample_initial(psi, grid)},
            g_sup, steps, subadd,
            [&](const std::vector<SolutionField>& f, size_t i) {
                return f[0].values[i] <= f[1].values[i] + f[2].values[i] + node_tol;
            },
            desc);

        // positive homogeneity: solve(lambda phi) = lambda solve(phi)
        for (double lambda : {0.0, 2.5}) {
            lockstep_compare(
                {sample_initial(combine_linear(lambda, phi, 0, phi), grid),
                 sample_initial(phi, grid)},
                g_sup, steps, homog,
                [&](const std::vector<SolutionField>& f, size_t i) {
                    double lhs = f[0].values[i];
                    double rhs = lambda * f[1].values[i];
                    return std::abs(lhs - rhs) <=
                           rel_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
                },
                desc + ", lambda=" + std::to_string(lambda));
        }

        // concavity of the inf form
        for (double alpha : {0.25, 0.5, 0.75}) {
            lockstep_compare(
                {sample_initial(phi, grid), sample_initial(psi, grid),
                 sample_initial(combine_linear(alpha, phi, 1.0 - alpha, psi), grid)},
                g_inf, steps, concavity,
                [&](const std::vector<SolutionField>& f, size_t i) {
                    return alpha * f[0].values[i] + (1.0 - alpha) * f[1].values[i] <=
                           f[2].values[i] + node_tol;
                },
                desc + ", alpha=" + std::to_string(alpha));
        }
    }

    // constants propagate exactly, independent of the random data
    for (double c : {7.0, -2.5}) {
        lockstep_compare(
            {sample_initial(make_constant(c), grid)}, g_sup, steps, constants,
            [&](const std::vector<SolutionField>& f, size_t i) { return f[0].values[i] == c; },
            "constant " + std::to_string(c));
    }

    // semigroup: one solve to t_final equals two chained solves, bitwise
    {
        std::mt19937_64 rng2(seed ^ 0x9e3779b97f4a7c15ull);
        TestFunction phi = random_polyline(rng2, grid.x_min, grid.x_max, 8, -1.0, 1.0);
        int k1 = steps / 2;
        SolutionField whole = continue_solve(sample_initial(phi, grid), g_sup, grid.t_final);
        SolutionField part = continue_solve(sample_initial(phi, grid), g_sup, k1 * grid.dt);
        part = continue_solve(std::move(part), g_sup, (steps - k1) * grid.dt);
        ++semigroup.checks;
        for (size_t i = 0; i < whole.values.size(); ++i) {
            if (whole.values[i] != part.values[i]) {
                ++semigroup.failures;
                if (semigroup.witness.empty())
                    semigroup.witness = describe_polyline(phi) + ", node " + std::to_string(i);
                break;
            }
        }
    }

    PropertySuiteResult result;
    result.checks = {comparison, subadd, homog, constants, semigroup, concavity};
    return result;
}

}  // namespace gexpect
