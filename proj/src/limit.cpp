#include "gexpect/limit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "gexpect/errors.hpp"
#include "gexpect/test_functions.hpp"

namespace gexpect {

std::string to_string(JointMode mode) {
    return mode == JointMode::kMarginalProduct ? "marginal_product" : "joint_credal";
}

namespace {

TestFunction coordinate_fn(int index, double sign) {
    TestFunction f;
    f.evaluator = [index, sign](std::span<const double> v) { return sign * v[index]; };
    return f;
}

void check_zero_mean(const CompositionTree& tree) {
    double up = expect(tree, coordinate_fn(0, 1.0));
    double down = expect(tree, coordinate_fn(0, -1.0));
    if (std::abs(up) > 1e-10 || std::abs(down) > 1e-10) {
        std::ostringstream os;
        os << "X must have no mean uncertainty about zero: E[X]=" << up
           << ", E[-X]=" << down;
        throw_validation(os.str());
    }
}

}  // namespace

IIDPair::IIDPair(CompositionTree tree, JointMode mode)
    : tree_(std::move(tree)), mode_(mode) {}

IIDPair::IIDPair(DiscreteUncertainDistribution x, DiscreteUncertainDistribution y)
    : IIDPair(product(CompositionTree::leaf(std::move(x)), CompositionTree::leaf(std::move(y))),
              JointMode::kMarginalProduct) {
    if (tree_.total_dim() != 2)
        throw_validation("IIDPair currently supports one-dimensional X and Y");
    check_zero_mean(tree_);
}

IIDPair IIDPair::joint(DiscreteUncertainDistribution joint_xy) {
    if (joint_xy.dim() != 2)
        throw_validation("joint pair distribution must have dimension 2 (d = 1)");
    IIDPair pair(CompositionTree::leaf(std::move(joint_xy)), JointMode::kJointCredal);
    check_zero_mean(pair.tree_);
    return pair;
}

GFunction IIDPair::induced_g() const {
    if (mode_ == JointMode::kJointCredal)
        return GFunction::from_joint(tree_.leaf_distribution());
    return GFunction::from_marginals(tree_.left().leaf_distribution(),
                                     tree_.right().leaf_distribution());
}

void gauss_hermite(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    if (m < 1) throw_validation("gauss_hermite requires m >= 1");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // polynomials: zero diagonal, off-diagonal sqrt(k).
    Matrix j(m, m, 0.0);
    for (int k = 1; k < m; ++k) {
        double b = std::sqrt(static_cast<double>(k));
        j(k - 1, k) = b;
        j(k, k - 1) = b;
    }
    Matrix vec;
    std::vector<double> eig = jacobi_eigen_sym(j, &vec);
    nodes.resize(m);
    weights.resize(m);
    for (int i = 0; i < m; ++i) {
        nodes[i] = eig[i];
        weights[i] = vec(0, i) * vec(0, i);
    }
    // enforce exact symmetry of the node/weight sets
    for (int i = 0; i < m / 2; ++i) {
        int r = m - 1 - i;
        double a = 0.5 * (std::abs(nodes[i]) + std::abs(nodes[r]));
        nodes[i] = -a;
        nodes[r] = a;
        double w = 0.5 * (weights[i] + weights[r]);
        weights[i] = w;
        weights[r] = w;
    }
    if (m % 2 == 1) nodes[m / 2] = 0.0;
    double sum = 0.0;
    for (double w : weights) sum += w;
    for (double& w : weights) w /= sum;
}

PerturbedPair::PerturbedPair(IIDPair base, double epsilon, int m)
    : base_(std::move(base)),
      epsilon_(epsilon),
      eta_(DiscreteUncertainDistribution::point_mass({0.0})) {
    if (!(epsilon > 0.0)) throw_validation("perturbation epsilon must be positive");
    if (m < 3) throw_validation("perturbation requires m >= 3 nodes");
    if (m % 2 == 0)
        throw_validation("perturbation requires odd m (a node at 0 keeps odd moments exact)");
    std::vector<double> nodes, weights;
    gauss_hermite(m, nodes, weights);
    eta_ = DiscreteUncertainDistribution::scalar(nodes, {weights});

    double m1 = 0.0, m2 = 0.0;
    const auto& w = eta_.credal()[0];
    for (size_t i = 0; i < eta_.support_size(); ++i) {
        m1 += w[i] * eta_.support()[i][0];
        m2 += w[i] * eta_.support()[i][0] * eta_.support()[i][0];
    }
    if (std::abs(m1) > 1e-12 || std::abs(m2 - 1.0) > 1e-3)
        throw_validation("Gauss-Hermite discretization failed its moment checks");
}

double PerturbedPair::eta_abs_moment() const {
    double s = 0.0;
    const auto& w = eta_.credal()[0];
    for (size_t i = 0; i < eta_.support_size(); ++i)
        s += w[i] * std::abs(eta_.support()[i][0]);
    return s;
}

double PerturbedPair::eta_second_moment() const {
    double s = 0.0;
    const auto& w = eta_.credal()[0];
    for (size_t i = 0; i < eta_.support_size(); ++i)
        s += w[i] * eta_.support()[i][0] * eta_.support()[i][0];
    return s;
}

double PerturbedPair::g_eval(double p, double a) const {
    // G_eps(p, A) with X^eps = X + eps*eta; eta is the outermost classical
    // average, so the step tree is Product(eta, base step).
    CompositionTree tree = product(CompositionTree::leaf(eta_), base_.step_tree());
    double eps = epsilon_;
    TestFunction f;
    f.arity = 3;
    f.evaluator = [p, a, eps](std::span<const double> v) {
        double x = v[1] + eps * v[0];
        return 0.5 * a * x * x + p * v[2];
    };
    return expect(tree, f);
}

PerturbedPair perturb(const IIDPair& pair, double epsilon, int m) {
    return PerturbedPair(pair, epsilon, m);
}

namespace {

// ---------------------------------------------------------------------------
// Backward induction over the reachable partial-sum lattice
// ---------------------------------------------------------------------------

// Per-step model: the step composition tree plus, for every assignment of
// support points to its leaves ("combo", mixed-radix DFS order), the
// contribution a_x (scaled by 1/sqrt(n)) and a_y (scaled by 1/n) to the sum.
struct StepModel {
    CompositionTree tree;
    std::vector<const DiscreteUncertainDistribution*> leaves;
    std::vector<int> radix;
    std::vector<double> ax, ay;
    size_t combo_count = 0;
};

StepModel make_step_model(const CompositionTree& tree,
                          const std::function<void(std::span<const double>, double&, double&)>&
                              contribution) {
    StepModel m{tree, tree.leaves(), {}, {}, {}, 0};
    m.radix.reserve(m.leaves.size());
    size_t combos = 1;
    for (const auto* l : m.leaves) {
        m.radix.push_back(static_cast<int>(l->support_size()));
        combos *= l->support_size();
    }
    m.combo_count = combos;
    m.ax.resize(combos);
    m.ay.resize(combos);
    std::vector<double> coords(m.tree.total_dim());
    std::vector<int> idx(m.leaves.size(), 0);
    for (size_t c = 0; c < combos; ++c) {
        size_t rem = c;
        int off = 0;
        for (size_t l = 0; l < m.leaves.size(); ++l) {
            size_t denom = 1;
            for (size_t r = l + 1; r < m.leaves.size(); ++r) denom *= m.radix[r];
            idx[l] = static_cast<int>(rem / denom);
            rem %= denom;
            const auto& pt = m.leaves[l]->support()[idx[l]];
            std::copy(pt.begin(), pt.end(), coords.begin() + off);
            off += m.leaves[l]->dim();
        }
        contribution(coords, m.ax[c], m.ay[c]);
    }
    return m;
}

StepModel make_step_model(const IIDPair& pair) {
    // both joint modes expose coordinates (x, y) on the step tree
    return make_step_model(pair.step_tree(),
                           [](std::span<const double> v, double& ax, double& ay) {
                               ax = v[0];
                               ay = v[1];
                           });
}

StepModel make_step_model(const PerturbedPair& pair) {
    CompositionTree tree = product(CompositionTree::leaf(pair.eta()), pair.base().step_tree());
    double eps = pair.epsilon();
    return make_step_model(tree, [eps](std::span<const double> v, double& ax, double& ay) {
        ax = v[1] + eps * v[0];
        ay = v[2];
    });
}

// Quasi-gcd of doubles: folds near-multiples, stops at `tol`.
double float_gcd(double a, double b, double tol) {
    a = std::abs(a);
    b = std::abs(b);
    if (a < b) std::swap(a, b);
    while (b > tol) {
        double t = std::fmod(a, b);
        if (t > b / 2) t = b - t;
        a = b;
        b = t;
    }
    return a;
}

// Common positive base h with every value an integer multiple of h.
// Returns 0 when all values vanish, nullopt when no base exists.
std::optional<double> common_base(std::span<const double> values) {
    double maxabs = 0.0;
    for (double v : values) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs == 0.0) return 0.0;
    double tol = 1e-9 * maxabs;
    double g = 0.0;
    for (double v : values) {
        double a = std::abs(v);
        if (a < tol) continue;
        g = (g == 0.0) ? a : float_gcd(g, a, tol);
    }
    if (g < tol) return std::nullopt;
    for (double v : values) {
        double r = v / g;
        if (std::abs(r - std::round(r)) > 1e-6) return std::nullopt;
        if (std::abs(r) > 1e9) return std::nullopt;
    }
    return g;
}

struct StateKey {
    long long kx = 0, ky = 0;
    bool operator==(const StateKey&) const = default;
};

struct StateKeyHash {
    size_t operator()(const StateKey& k) const {
        uint64_t h = static_cast<uint64_t>(k.kx) * 0x9e3779b97f4a7c15ull;
        h ^= static_cast<uint64_t>(k.ky) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return static_cast<size_t>(h);
    }
};

struct Level {
    std::vector<StateKey> keys;
    std::vector<double> s;  // representative partial-sum value
    std::unordered_map<StateKey, int, StateKeyHash> index;
};

class Lattice {
public:
    Lattice(const StepModel& model, int n, const HarnessOptions& options)
        : model_(model), n_(n), options_(options) {
        double sqrtn = std::sqrt(static_cast<double>(n));
        delta_.resize(model.combo_count);
        for (size_t c = 0; c < model.combo_count; ++c)
            delta_[c] = model.ax[c] / sqrtn + model.ay[c] / n;

        auto hx = common_base(model.ax);
        auto hy = common_base(model.ay);
        exact_ = hx.has_value() && hy.has_value();
        if (exact_) {
            hx_ = *hx;
            hy_ = *hy;
            kx_.resize(model.combo_count);
            ky_.resize(model.combo_count);
            for (size_t c = 0; c < model.combo_count; ++c) {
                kx_[c] = hx_ > 0 ? std::llround(model.ax[c] / hx_) : 0;
                ky_[c] = hy_ > 0 ? std::llround(model.ay[c] / hy_) : 0;
            }
        }
        build_levels();
    }

    const std::vector<Level>& levels() const { return levels_; }
    bool exact() const { return exact_; }

    StateKey child_key(const Level& level, int state, size_t combo) const {
        if (exact_)
            return {level.keys[state].kx + kx_[combo], level.keys[state].ky + ky_[combo]};
        return {quantize(level.s[state] + delta_[combo]), 0};
    }

    double child_value_s(const Level& level, int state, size_t combo) const {
        return level.s[state] + delta_[combo];
    }

private:
    long long quantize(double v) const {
        return std::llround(v / options_.merge_tol);
    }

    double canonical_s(const StateKey& k) const {
        double sqrtn = std::sqrt(static_cast<double>(n_));
        double sx = hx_ > 0 ? static_cast<double>(k.kx) * hx_ / sqrtn : 0.0;
        double sy = hy_ > 0 ? static_cast<double>(k.ky) * hy_ / n_ : 0.0;
        return sx + sy;
    }

    void build_levels() {
        levels_.resize(n_ + 1);
        levels_[0].keys.push_back({0, 0});
        levels_[0].s.push_back(0.0);
        levels_[0].index.emplace(StateKey{0, 0}, 0);
        size_t total = 1;
        for (int k = 0; k < n_; ++k) {
            const Level& cur = levels_[k];
            Level& next = levels_[k + 1];
            for (int st = 0; st < static_cast<int>(cur.keys.size()); ++st) {
                for (size_t c = 0; c < model_.combo_count; ++c) {
                    StateKey key = child_key(cur, st, c);
                    auto [it, inserted] = next.index.emplace(key, static_cast<int>(next.keys.size()));
                    if (inserted) {
                        next.keys.push_back(key);
                        next.s.push_back(exact_ ? canonical_s(key) : child_value_s(cur, st, c));
                        if (++total > options_.state_budget) {
                            std::ostringstream os;
                            os << "reachable-state budget of " << options_.state_budget
                               << " exceeded at level " << (k + 1)
                               << "; reduce n or the support sizes";
                            throw_resource(os.str());
                        }
                    }
                }
            }
        }
    }

    const StepModel& model_;
    int n_;
    HarnessOptions options_;
    bool exact_ = false;
    double hx_ = 0.0, hy_ = 0.0;
    std::vector<long long> kx_, ky_;
    std::vector<double> delta_;
    std::vector<Level> levels_;
};

// Expectation over the step tree at one state: nested max-of-averages with
// the continuation values read from the next level.
class StepEvaluator {
public:
    StepEvaluator(const StepModel& model, const Lattice& lattice)
        : model_(model), lattice_(lattice) {}

    double evaluate(const Level& level, int state, const Level& next,
                    const std::vector<double>& next_values) const {
        level_ = &level;
        state_ = state;
        next_ = &next;
        next_values_ = &next_values;
        return eval_leaf(0, 0);
    }

private:
    double eval_leaf(size_t leaf_idx, size_t combo_prefix) const {
        if (leaf_idx == model_.leaves.size()) {
            StateKey key = lattice_.child_key(*level_, state_, combo_prefix);
            auto it = next_->index.find(key);
            if (it == next_->index.end())
                throw_numerical("internal error: missing successor state in lattice");
            return (*next_values_)[it->second];
        }
        const auto& dist = *model_.leaves[leaf_idx];
        size_t ns = dist.support_size();
        std::vector<double> inner(ns);
        for (size_t i = 0; i < ns; ++i)
            inner[i] = eval_leaf(leaf_idx + 1, combo_prefix * ns + i);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : dist.credal()) {
            double s = 0.0;
            for (size_t i = 0; i < ns; ++i) s += p[i] * inner[i];
            best = std::max(best, s);
        }
        return best;
    }

    const StepModel& model_;
    const Lattice& lattice_;
    mutable const Level* level_ = nullptr;
    mutable int state_ = 0;
    mutable const Level* next_ = nullptr;
    mutable const std::vector<double>* next_values_ = nullptr;
};

double backward_induction(const StepModel& model, int n, const TestFunction& phi,
                          const HarnessOptions& options) {
    if (n < 1) throw_validation("clt_expect requires n >= 1");
    Lattice lattice(model, n, options);
    const auto& levels = lattice.levels();

    std::vector<double> values(levels[n].keys.size());
    for (size_t i = 0; i < values.size(); ++i) values[i] = phi(levels[n].s[i]);

    StepEvaluator evaluator(model, lattice);
    for (int k = n - 1; k >= 0; --k) {
        std::vector<double> prev(levels[k].keys.size());
        for (int st = 0; st < static_cast<int>(prev.size()); ++st)
            prev[st] = evaluator.evaluate(levels[k], st, levels[k + 1], values);
        values = std::move(prev);
    }
    return values[0];
}

double fit_rate(const std::vector<int>& n_values, const std::vector<double>& errors) {
    // least-squares slope of log(error) against log(n); alpha = -2 * slope
    size_t m = n_values.size();
    if (m < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        double x = std::log(static_cast<double>(n_values[i]));
        double y = std::log(std::max(errors[i], 1e-16));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = m * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    double slope = (m * sxy - sx * sy) / denom;
    return -2.0 * slope;
}

}  // namespace

double clt_expect(const IIDPair& pair, int n, const TestFunction& phi,
                  const HarnessOptions& options) {
    StepModel model = make_step_model(pair);
    return backward_induction(model, n, phi, options);
}

double clt_expect(const PerturbedPair& pair, int n, const TestFunction& phi,
                  const HarnessOptions& options) {
    StepModel model = make_step_model(pair);
    return backward_induction(model, n, phi, options);
}

double uniform_moment_check(const IIDPair& pair, int p, const std::vector<int>& n_list,
                            const HarnessOptions& options) {
    if (p < 1) throw_validation("uniform_moment_check requires p >= 1");
    double worst = 0.0;
    for (int n : n_list)
        worst = std::max(worst, clt_expect(pair, n, make_abs_power(p), options));
    return worst;
}

ConvergenceReport clt_convergence_study(const IIDPair& pair, const TestFunction& phi,
                                        const std::vector<int>& n_list, const Grid& grid,
                                        const HarnessOptions& options) {
    if (n_list.empty()) throw_validation("n_list must be non-empty");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw_validation("n_list must be ascending");

    ConvergenceReport report;
    report.n_values = n_list;
    report.joint_mode = pair.joint_mode();

    GFunction g = pair.induced_g();

    // degenerate diffusion breaks the uniform ellipticity hypothesis; the
    // study still runs but flags it
    double sigma2_min = std::numeric_limits<double>::infinity();
    for (const auto& cov : g.scenarios().covariances())
        sigma2_min = std::min(sigma2_min, cov(0, 0));
    if (sigma2_min <= 0.0)
        report.warnings.push_back(
            "scenario set has degenerate diffusion (sigma2_min = 0); uniform "
            "ellipticity fails and the CLT rate is not guaranteed; consider a "
            "Gaussian perturbation");

    for (int n : n_list)
        report.harness_values.push_back(clt_expect(pair, n, phi, options));

    double halfwidth = std::min(-grid.x_min, grid.x_max);
    TestFunction phi_pde = phi.bounded ? phi : clip_linear(phi, halfwidth - 1.0);
    report.pde_reference = gdist_expect(phi_pde, g, grid);

    for (double v : report.harness_values)
        report.abs_errors.push_back(std::abs(v - report.pde_reference));
    report.fitted_rate = fit_rate(report.n_values, report.abs_errors);
    double c = 0.0;
    for (size_t i = 0; i < report.n_values.size(); ++i)
        c = std::max(c, report.abs_errors[i] *
                            std::pow(report.n_values[i], report.fitted_rate / 2.0));
    report.rate_constant = c;

    int p = phi.bounded ? 1 : phi.growth_exponent + 1;
    report.moment_bound = uniform_moment_check(pair, p, n_list, options);
    return report;
}

ConvergenceReport lln_distance_study(const DiscreteUncertainDistribution& y,
                                     const std::vector<int>& n_list,
                                     const HarnessOptions& options) {
    if (y.dim() != 1) throw_validation("lln_distance_study requires a 1-D distribution");
    if (n_list.empty()) throw_validation("n_list must be non-empty");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < y.credal().size(); ++k) {
        double m = y.mean_under(k)[0];
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    TestFunction phi = make_distance_to_interval(lo, hi);

    IIDPair pair(DiscreteUncertainDistribution::point_mass({0.0}), y);
    ConvergenceReport report;
    report.n_values = n_list;
    report.joint_mode = pair.joint_mode();
    report.pde_reference = 0.0;
    for (int n : n_list) {
        double v = clt_expect(pair, n, phi, options);
        report.harness_values.push_back(v);
        report.abs_errors.push_back(std::abs(v));
    }
    report.fitted_rate = fit_rate(report.n_values, report.abs_errors);
    double c = 0.0;
    for (size_t i = 0; i < report.n_values.size(); ++i)
        c = std::max(c, report.abs_errors[i] *
                            std::pow(report.n_values[i], report.fitted_rate / 2.0));
    report.rate_constant = c;
    report.moment_bound = uniform_moment_check(pair, 1, n_list, options);
    return report;
}

}  // namespace gexpect
