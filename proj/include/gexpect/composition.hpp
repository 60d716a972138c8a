#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gexpect/distribution.hpp"

namespace gexpect {

/// Ordered composition of uncertain distributions. A Product(left, right)
/// node means "right is independent to the left": evaluation freezes the
/// left coordinates and takes the inner expectation over the right factor
/// first. The order is semantic and is never flattened away; under
/// uncertainty, swapping the factors changes the value.
class CompositionTree {
public:
    static CompositionTree leaf(DiscreteUncertainDistribution d);

    int total_dim() const;
    bool is_leaf() const;
    const DiscreteUncertainDistribution& leaf_distribution() const;
    CompositionTree left() const;
    CompositionTree right() const;

    /// Leaves in nesting order (outermost expectation first).
    std::vector<const DiscreteUncertainDistribution*> leaves() const;

    friend CompositionTree product(CompositionTree left, CompositionTree right);

private:
    struct Node;
    explicit CompositionTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Composition of two trees; the right factor is independent to the left.
CompositionTree product(CompositionTree left, CompositionTree right);

/// Left-nested tree of n copies of d: copy i+1 is independent to copies 1..i.
CompositionTree iid_sequence(const DiscreteUncertainDistribution& d, int n);

/// Upper (credal) expectation of phi over the tree. On a leaf this is the
/// maximum over credal vectors of the classical expectation; on a product it
/// is the nested evaluation with the left coordinates frozen.
double expect(const CompositionTree& tree, const TestFunction& phi);

/// Lower expectation -E[-phi]; convenience for interval reporting.
double lower_expect(const CompositionTree& tree, const TestFunction& phi);

/// Mean and second-moment intervals of a one-dimensional distribution.
UncertaintyParameters four_parameters(const DiscreteUncertainDistribution& d);

struct AxiomCheck {
    std::string axiom;
    bool pass = true;
    long checks = 0;
    std::string witness;  // filled on first failure
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    bool all_pass() const;
};

/// Checks the defining properties of an upper expectation on the given test
/// functions: monotonicity (on pairs ordered pointwise over the reachable
/// support), constant preserving, sub-additivity and positive homogeneity.
/// `sample_budget` caps how many support combinations are enumerated when
/// deciding pointwise order.
AxiomReport check_axioms(const CompositionTree& tree,
                         const std::vector<TestFunction>& fns,
                         long sample_budget = 100000);

/// Equality in distribution can only be probed over a finite family of test
/// functions. Returns an empty optional when no counterexample was found,
/// otherwise a description of the first separating function.
std::optional<std::string> identically_distributed(
    const DiscreteUncertainDistribution& a, const DiscreteUncertainDistribution& b,
    const std::vector<TestFunction>& fns, double tol = 1e-12);

}  // namespace gexpect
