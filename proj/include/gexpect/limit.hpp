#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gexpect/composition.hpp"
#include "gexpect/gfunction.hpp"
#include "gexpect/pde.hpp"

namespace gexpect {

enum class JointMode { kMarginalProduct, kJointCredal };

std::string to_string(JointMode mode);

/// The per-step pair (X, Y) of a normalized-sum scheme
///   S_n = sum_i (X_i / sqrt(n) + Y_i / n),
/// with step i+1 independent to steps 1..i. X must carry no mean uncertainty
/// (upper and lower means both zero within 1e-10). In marginal-product mode Y
/// is the inner (independent) factor within a step; in joint-credal mode one
/// credal set on a 2d-dimensional support describes (X, Y) jointly.
class IIDPair {
public:
    IIDPair(DiscreteUncertainDistribution x, DiscreteUncertainDistribution y);
    static IIDPair joint(DiscreteUncertainDistribution joint_xy);

    int dim() const { return 1; }
    JointMode joint_mode() const { return mode_; }
    const CompositionTree& step_tree() const { return tree_; }

    /// The Hamiltonian induced by one step.
    GFunction induced_g() const;

private:
    IIDPair(CompositionTree tree, JointMode mode);
    CompositionTree tree_;
    JointMode mode_;
};

/// Gauss-Hermite discretization of the standard normal: m nodes and weights
/// with sum(w) = 1, sum(w x) = 0 and sum(w x^2) = 1 up to quadrature
/// accuracy; m must be odd so a node sits at 0.
void gauss_hermite(int m, std::vector<double>& nodes, std::vector<double>& weights);

/// Base pair with X replaced by X + epsilon * eta, where eta is a
/// singleton-credal (classical) Gauss-Hermite discretization of N(0, 1).
/// eta enters each step as the outermost classical average.
class PerturbedPair {
public:
    PerturbedPair(IIDPair base, double epsilon, int m);

    const IIDPair& base() const { return base_; }
    double epsilon() const { return epsilon_; }
    const DiscreteUncertainDistribution& eta() const { return eta_; }

    double eta_abs_moment() const;     // E|eta|
    double eta_second_moment() const;  // E[eta^2]

    /// Perturbed Hamiltonian G_eps(p, A).
    double g_eval(double p, double a) const;
    double g_cov(double a) const { return g_eval(0.0, a); }

private:
    IIDPair base_;
    double epsilon_;
    DiscreteUncertainDistribution eta_;
};

PerturbedPair perturb(const IIDPair& pair, double epsilon, int m);

struct HarnessOptions {
    /// Cap on the total number of reachable partial-sum states across levels.
    size_t state_budget = 5'000'000;
    /// Key tolerance for state merging when supports are not commensurable.
    double merge_tol = 1e-12;
};

/// Exact E[phi(S_n)] by backward induction over the reachable partial-sum
/// lattice. States are merged exactly (integer lattice coordinates) when the
/// per-step contributions are rational multiples of common bases, otherwise
/// at the `merge_tol` key tolerance.
double clt_expect(const IIDPair& pair, int n, const TestFunction& phi,
                  const HarnessOptions& options = {});
double clt_expect(const PerturbedPair& pair, int n, const TestFunction& phi,
                  const HarnessOptions& options = {});

struct ConvergenceReport {
    std::vector<int> n_values;
    std::vector<double> harness_values;
    double pde_reference = 0.0;
    std::vector<double> abs_errors;
    double fitted_rate = 0.0;    // alpha_fit: error ~ C (1/n)^(alpha_fit/2)
    double rate_constant = 0.0;  // C = max over n of error * n^(alpha_fit/2)
    double moment_bound = 0.0;   // max over n of E[|S_n|^p]
    double holder_alpha = 1.0;
    JointMode joint_mode = JointMode::kMarginalProduct;
    std::vector<std::string> warnings;
};

/// Runs clt_expect along n_list and compares against the G-distribution
/// expectation from the finite-difference solver (reduced form on `grid`).
/// Unbounded phi is clipped to a tangent-line continuation outside
/// [-(L-1), L-1] before it is handed to the PDE; the clipping error is
/// controlled by the reported moment bound.
ConvergenceReport clt_convergence_study(const IIDPair& pair, const TestFunction& phi,
                                        const std::vector<int>& n_list, const Grid& grid,
                                        const HarnessOptions& options = {});

/// Law-of-large-numbers study: E[d_hull(sum Y_i / n)] along n_list, where the
/// hull is the interval spanned by the per-measure means of Y. The limit
/// reference is 0.
ConvergenceReport lln_distance_study(const DiscreteUncertainDistribution& y,
                                     const std::vector<int>& n_list,
                                     const HarnessOptions& options = {});

/// max over n in n_list of E[|S_n|^p]; gates polynomial-growth test
/// functions in convergence studies.
double uniform_moment_check(const IIDPair& pair, int p, const std::vector<int>& n_list,
                            const HarnessOptions& options = {});

}  // namespace gexpect
