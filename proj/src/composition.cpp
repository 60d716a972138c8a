#include "gexpect/composition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "gexpect/errors.hpp"

namespace gexpect {

struct CompositionTree::Node {
    // Leaf when dist holds a value; Product otherwise.
    std::shared_ptr<const DiscreteUncertainDistribution> dist;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
    int total_dim = 0;
};

CompositionTree CompositionTree::leaf(DiscreteUncertainDistribution d) {
    auto node = std::make_shared<Node>();
    node->total_dim = d.dim();
    node->dist = std::make_shared<const DiscreteUncertainDistribution>(std::move(d));
    return CompositionTree(std::move(node));
}

int CompositionTree::total_dim() const { return node_->total_dim; }

bool CompositionTree::is_leaf() const { return node_->dist != nullptr; }

const DiscreteUncertainDistribution& CompositionTree::leaf_distribution() const {
    if (!is_leaf()) throw_validation("leaf_distribution called on a product node");
    return *node_->dist;
}

CompositionTree CompositionTree::left() const {
    if (is_leaf()) throw_validation("left() called on a leaf");
    return CompositionTree(node_->left);
}

CompositionTree CompositionTree::right() const {
    if (is_leaf()) throw_validation("right() called on a leaf");
    return CompositionTree(node_->right);
}

std::vector<const DiscreteUncertainDistribution*> CompositionTree::leaves() const {
    std::vector<const DiscreteUncertainDistribution*> out;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* node = stack.back();
        stack.pop_back();
        if (node->dist) {
            out.push_back(node->dist.get());
            continue;
        }
        stack.push_back(node->right.get());
        stack.push_back(node->left.get());
    }
    return out;
}

CompositionTree product(CompositionTree left, CompositionTree right) {
    auto node = std::make_shared<CompositionTree::Node>();
    node->total_dim = left.total_dim() + right.total_dim();
    node->left = left.node_;
    node->right = right.node_;
    return CompositionTree(std::move(node));
}

CompositionTree iid_sequence(const DiscreteUncertainDistribution& d, int n) {
    if (n < 1) throw_validation("iid_sequence requires n >= 1");
    CompositionTree tree = CompositionTree::leaf(d);
    for (int i = 1; i < n; ++i) tree = product(tree, CompositionTree::leaf(d));
    return tree;
}

namespace {

// Nested evaluation over the leaves in nesting order. Freezing the outer
// coordinates, the expectation over leaf k is
//   max over credal p of sum_i p_i * (value of the inner chain at support i).
class NestedEvaluator {
public:
    NestedEvaluator(const std::vector<const DiscreteUncertainDistribution*>& leaves,
                    const TestFunction& phi, int total_dim)
        : leaves_(leaves), phi_(phi), coords_(total_dim) {
        offsets_.reserve(leaves.size());
        int off = 0;
        for (const auto* l : leaves) {
            offsets_.push_back(off);
            off += l->dim();
        }
    }

    double run() { return eval(0); }

private:
    double eval(size_t leaf_idx) {
        if (leaf_idx == leaves_.size()) return phi_(std::span<const double>(coords_));
        const auto& dist = *leaves_[leaf_idx];
        int off = offsets_[leaf_idx];
        size_t ns = dist.support_size();
        std::vector<double> inner(ns);
        for (size_t i = 0; i < ns; ++i) {
            const auto& pt = dist.support()[i];
            std::copy(pt.begin(), pt.end(), coords_.begin() + off);
            inner[i] = eval(leaf_idx + 1);
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : dist.credal()) {
            double s = 0.0;
            for (size_t i = 0; i < ns; ++i) s += p[i] * inner[i];
            best = std::max(best, s);
        }
        return best;
    }

    const std::vector<const DiscreteUncertainDistribution*>& leaves_;
    const TestFunction& phi_;
    std::vector<double> coords_;
    std::vector<int> offsets_;
};

}  // namespace

double expect(const CompositionTree& tree, const TestFunction& phi) {
    if (phi.arity >= 0 && phi.arity != tree.total_dim()) {
        std::ostringstream os;
        os << "test function arity " << phi.arity << " does not match tree dimension "
           << tree.total_dim();
        throw_validation(os.str());
    }
    auto leaves = tree.leaves();
    NestedEvaluator ev(leaves, phi, tree.total_dim());
    return ev.run();
}

double lower_expect(const CompositionTree& tree, const TestFunction& phi) {
    TestFunction neg = phi;
    auto base = phi.evaluator;
    neg.evaluator = [base](std::span<const double> x) { return -base(x); };
    return -expect(tree, neg);
}

UncertaintyParameters four_parameters(const DiscreteUncertainDistribution& d) {
    if (d.dim() != 1)
        throw_validation("four_parameters requires a one-dimensional distribution");
    CompositionTree t = CompositionTree::leaf(d);
    TestFunction id{.evaluator = [](std::span<const double> x) { return x[0]; }};
    TestFunction sq{.evaluator = [](std::span<const double> x) { return x[0] * x[0]; }};
    UncertaintyParameters p;
    p.mean_upper = expect(t, id);
    p.mean_lower = lower_expect(t, id);
    p.var_upper = expect(t, sq);
    p.var_lower = lower_expect(t, sq);
    return p;
}

bool AxiomReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

// Enumerates reachable support combinations (prefix of at most `budget`).
std::vector<std::vector<double>> reachable_points(
    const std::vector<const DiscreteUncertainDistribution*>& leaves, int total_dim,
    long budget) {
    std::vector<std::vector<double>> pts;
    std::vector<double> coords(total_dim);
    std::function<void(size_t, int)> rec = [&](size_t leaf_idx, int off) {
        if (static_cast<long>(pts.size()) >= budget) return;
        if (leaf_idx == leaves.size()) {
            pts.push_back(coords);
            return;
        }
        for (const auto& pt : leaves[leaf_idx]->support()) {
            std::copy(pt.begin(), pt.end(), coords.begin() + off);
            rec(leaf_idx + 1, off + leaves[leaf_idx]->dim());
        }
    };
    rec(0, 0);
    return pts;
}

TestFunction combine(const TestFunction& a, const TestFunction& b, double ca, double cb) {
    TestFunction f;
    auto ea = a.evaluator, eb = b.evaluator;
    f.evaluator = [ea, eb, ca, cb](std::span<const double> x) {
        return ca * ea(x) + cb * eb(x);
    };
    f.arity = a.arity;
    return f;
}

std::string witness_str(const std::string& what, double lhs, double rhs) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": lhs=" << lhs << " rhs=" << rhs;
    return os.str();
}

}  // namespace

AxiomReport check_axioms(const CompositionTree& tree,
                         const std::vector<TestFunction>& fns, long sample_budget) {
    if (fns.empty()) throw_validation("check_axioms requires a non-empty function list");

    AxiomReport report;
    AxiomCheck mono{.axiom = "monotonicity"};
    AxiomCheck constants{.axiom = "constant_preserving"};
    AxiomCheck subadd{.axiom = "sub_additivity"};
    AxiomCheck homog{.axiom = "positive_homogeneity"};

    auto leaves = tree.leaves();
    auto points = reachable_points(leaves, tree.total_dim(), sample_budget);

    const double rel_tol = 1e-12;
    auto slack = [&](double a, double b) {
        return rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
    };

    std::vector<double> values(fns.size());
    for (size_t i = 0; i < fns.size(); ++i) values[i] = expect(tree, fns[i]);

    // (a) monotonicity on pointwise-ordered pairs
    for (size_t i = 0; i < fns.size(); ++i) {
        for (size_t j = 0; j < fns.size(); ++j) {
            if (i == j) continue;
            bool leq = true;
            for (const auto& pt : points) {
                if (fns[i](std::span<const double>(pt)) >
                    fns[j](std::span<const double>(pt))) {
                    leq = false;
                    break;
                }
            }
            if (!leq) continue;
            ++mono.checks;
            if (values[i] > values[j] + slack(values[i], values[j])) {
                mono.pass = false;
                if (mono.witness.empty())
                    mono.witness = witness_str("E[phi_" + std::to_string(i) +
                                                   "] <= E[phi_" + std::to_string(j) + "]",
                                               values[i], values[j]);
            }
        }
    }

    // (b) constant preserving
    for (double c : {7.0, 0.0, -2.5}) {
        TestFunction cf{.evaluator = [c](std::span<const double>) { return c; }};
        double v = expect(tree, cf);
        ++constants.checks;
        if (std::abs(v - c) > slack(v, c)) {
            constants.pass = false;
            if (constants.witness.empty()) constants.witness = witness_str("E[c]=c", v, c);
        }
    }

    // (c) sub-additivity on all pairs
    for (size_t i = 0; i < fns.size(); ++i) {
        for (size_t j = 0; j < fns.size(); ++j) {
            double lhs = expect(tree, combine(fns[i], fns[j], 1.0, 1.0));
            double rhs = values[i] + values[j];
            ++subadd.checks;
            if (lhs > rhs + slack(lhs, rhs)) {
                subadd.pass = false;
                if (subadd.witness.empty())
                    subadd.witness = witness_str("E[phi_" + std::to_string(i) + "+phi_" +
                                                     std::to_string(j) + "]",
                                                 lhs, rhs);
            }
        }
    }

    // (d) positive homogeneity
    for (double lambda : {0.0, 1.0, 2.5}) {
        for (size_t i = 0; i < fns.size(); ++i) {
            double lhs = expect(tree, combine(fns[i], fns[i], lambda, 0.0));
            double rhs = lambda * values[i];
            ++homog.checks;
            if (std::abs(lhs - rhs) > slack(lhs, rhs)) {
                homog.pass = false;
                if (homog.witness.empty())
                    homog.witness = witness_str(
                        "E[lambda*phi_" + std::to_string(i) + "], lambda=" +
                            std::to_string(lambda),
                        lhs, rhs);
            }
        }
    }

    report.checks = {mono, constants, subadd, homog};
    return report;
}

std::optional<std::string> identically_distributed(
    const DiscreteUncertainDistribution& a, const DiscreteUncertainDistribution& b,
    const std::vector<TestFunction>& fns, double tol) {
    if (a.dim() != b.dim())
        return "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
               std::to_string(b.dim());
    CompositionTree ta = CompositionTree::leaf(a);
    CompositionTree tb = CompositionTree::leaf(b);
    for (size_t i = 0; i < fns.size(); ++i) {
        double va = expect(ta, fns[i]);
        double vb = expect(tb, fns[i]);
        if (std::abs(va - vb) > tol * std::max({1.0, std::abs(va), std::abs(vb)})) {
            std::ostringstream os;
            os.precision(17);
            os << "function " << i << " separates the distributions: " << va
               << " vs " << vb;
            return os.str();
        }
    }
    return std::nullopt;  // no counterexample found in the supplied family
}

}  // namespace gexpect
