#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gexpect/gfunction.hpp"

namespace gexpect {

enum class BoundaryMode { kFrozenInitial, kLinearExtrapolation };

/// Uniform space-time grid. `spatial_dim` is 1 for the reduced one-variable
/// equation and 2 for the full (x, y) form in d = 1; in the 2-D case both
/// axes share [x_min, x_max] and dx.
struct Grid {
    int spatial_dim = 1;
    double x_min = -1.0;
    double x_max = 1.0;
    double dx = 0.1;
    double dt = 0.01;
    double t_final = 1.0;

    int nodes_per_axis() const;
    double node(int i) const { return x_min + i * dx; }
    int total_steps() const;

    /// Enforces the grid invariants: integral node count >= 8 cells,
    /// integral step count, and the stability bound
    ///   dt <= 1 / (sigma2_max/dx^2 + q_max/dx),
    /// which keeps every stencil coefficient non-negative (monotone update).
    void validate(double sigma2_max, double q_max) const;
};

/// Grid factory. Picks dt = safety / (sigma2_max/dx^2 + q_max/dx), shrunk so
/// that t_final/dt is integral, and rejects domains too small to contain the
/// diffusion/transport cone (halfwidth rule L >= 3 sigma_max sqrt(T) + q_max T).
/// The halfwidth is rounded up to a whole number of cells so that x = 0 is a
/// node.
Grid build_grid(const GFunction& g, double domain_halfwidth, double dx,
                double t_final, double safety, int spatial_dim = 1);

/// Grid values at one time level, plus metadata. For spatial_dim = 2 the
/// layout is row-major values[ix * n + iy] with diffusion along x (ix) and
/// transport along y (iy).
///
/// `truncation_error_bound` is a heuristic banner for the domain-truncation
/// error at the centre, Lip(phi) * exp(-(L - cone)^2 / (2 sigma2_max t)); it
/// is reported, not proven. Callers needing rigour increase L until the
/// answer stops moving.
struct SolutionField {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;
    BoundaryMode boundary_mode = BoundaryMode::kFrozenInitial;
    double truncation_error_bound = 0.0;
    double initial_lipschitz = 1.0;  // Lip(phi) used for the banner above

    double at(int ix) const { return values[ix]; }
    double at(int ix, int iy) const {
        return values[static_cast<size_t>(ix) * grid.nodes_per_axis() + iy];
    }
    /// Value at the spatial origin (x = 0 [, y = 0]).
    double center_value() const;
};

/// Samples phi on the grid nodes (phi of one variable for spatial_dim = 1,
/// of two variables for spatial_dim = 2).
SolutionField sample_initial(const TestFunction& phi, const Grid& grid,
                             BoundaryMode bm = BoundaryMode::kFrozenInitial);

/// One explicit Euler step of d/dt v = G(Dv, D^2v): at every interior node
/// the per-scenario linear stencils (central second difference for the
/// diffusion part, upwind one-sided difference in the drift direction for the
/// transport part) are assembled in full and aggregated per node (max for the
/// sup form, min for the inf form). Boundary nodes follow the boundary mode.
SolutionField step(const SolutionField& field, const GFunction& g);

/// Runs `field` forward by `duration` (must be an integral number of steps).
SolutionField continue_solve(SolutionField field, const GFunction& g, double duration);

/// Initial condition phi evolved to time t on the reduced (one-variable) form.
SolutionField solve(const TestFunction& phi, const GFunction& g, double t,
                    const Grid& grid, BoundaryMode bm = BoundaryMode::kFrozenInitial);

/// Full (x, y) form in d = 1: diffusion in x, transport in y.
SolutionField solve_full(const TestFunction& phi, const GFunction& g, double t,
                         const Grid& grid, BoundaryMode bm = BoundaryMode::kFrozenInitial);

/// u(1, 0[, 0]): the G-distribution expectation of phi. Uses the reduced or
/// the full form according to grid.spatial_dim.
double gdist_expect(const TestFunction& phi, const GFunction& g, const Grid& grid,
                    BoundaryMode bm = BoundaryMode::kFrozenInitial);

struct PropertyCheck {
    std::string name;
    long checks = 0;
    long failures = 0;
    std::string witness;  // first failure: initial data, node, time level
    bool pass() const { return failures == 0; }
};

struct PropertySuiteResult {
    std::vector<PropertyCheck> checks;
    bool all_pass() const;
};

/// Discrete property suite on randomized piecewise-linear initial data:
/// comparison (exact), sub-additivity and inf-form concavity (1e-10
/// nodewise), positive homogeneity (1e-12 relative), constants (exact) and
/// the semigroup identity (exact), each verified at every time level.
PropertySuiteResult run_property_suite(const SupportSetTheta& theta, const Grid& grid,
                                       int num_conditions, uint64_t seed);

}  // namespace gexpect
