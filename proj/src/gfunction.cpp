#include "gexpect/gfunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gexpect/errors.hpp"

namespace gexpect {

SupportSetTheta::SupportSetTheta(int dim, std::vector<ScenarioPair> pairs,
                                 std::optional<double> ellipticity_lower_bound)
    : dim_(dim), pairs_(std::move(pairs)), beta_(ellipticity_lower_bound) {
    if (dim_ <= 0) throw_validation("scenario set dimension must be positive");
    if (pairs_.empty()) throw_validation("scenario set must be non-empty");
    for (const auto& pr : pairs_) {
        if (static_cast<int>(pr.mean.size()) != dim_)
            throw_validation("scenario mean dimension mismatch");
        if (pr.cov_factor.rows() != dim_ || pr.cov_factor.cols() != dim_)
            throw_validation("scenario covariance-factor dimension mismatch");
    }
    if (beta_ && *beta_ < 0.0)
        throw_validation("ellipticity lower bound must be non-negative");
}

SupportSetTheta SupportSetTheta::from_covariances(
    int dim, const std::vector<std::pair<std::vector<double>, Matrix>>& entries,
    std::optional<double> ellipticity_lower_bound) {
    std::vector<ScenarioPair> pairs;
    pairs.reserve(entries.size());
    for (const auto& [mean, cov] : entries) {
        if (!is_symmetric(cov, kSymmetryTol))
            throw_validation("covariance matrix must be symmetric");
        pairs.push_back({mean, sym_sqrt(cov)});
    }
    return SupportSetTheta(dim, std::move(pairs), ellipticity_lower_bound);
}

std::vector<Matrix> SupportSetTheta::covariances() const {
    std::vector<Matrix> out;
    out.reserve(pairs_.size());
    for (const auto& pr : pairs_) out.push_back(pr.cov_factor * pr.cov_factor.transposed());
    return out;
}

double SupportSetTheta::sigma2_max() const {
    double m = 0.0;
    for (const auto& cov : covariances()) m = std::max(m, largest_eigenvalue_sym(cov));
    return m;
}

double SupportSetTheta::q_max() const {
    double m = 0.0;
    for (const auto& pr : pairs_) {
        double n2 = 0.0;
        for (double v : pr.mean) n2 += v * v;
        m = std::max(m, std::sqrt(n2));
    }
    return m;
}

namespace {

// Exact finite scenario set of an induced G. Every credal vector of the
// X factor contributes its second-moment matrix, every credal vector of the
// Y factor its mean; a joint credal vector contributes both at once.
SupportSetTheta derive_scenarios_marginal(const DiscreteUncertainDistribution& x,
                                          const DiscreteUncertainDistribution& y) {
    int d = x.dim();
    std::vector<Matrix> second_moments;
    for (size_t k = 0; k < x.credal().size(); ++k) {
        Matrix m2(d, d, 0.0);
        const auto& p = x.credal()[k];
        for (size_t i = 0; i < x.support_size(); ++i) {
            const auto& pt = x.support()[i];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) m2(a, b) += p[i] * pt[a] * pt[b];
        }
        second_moments.push_back(std::move(m2));
    }
    std::vector<ScenarioPair> pairs;
    for (size_t k = 0; k < y.credal().size(); ++k) {
        std::vector<double> mean = y.mean_under(k);
        for (const auto& m2 : second_moments)
            pairs.push_back({mean, sym_sqrt(m2)});
    }
    return SupportSetTheta(x.dim(), std::move(pairs));
}

SupportSetTheta derive_scenarios_joint(const DiscreteUncertainDistribution& joint, int d) {
    std::vector<ScenarioPair> pairs;
    for (size_t k = 0; k < joint.credal().size(); ++k) {
        const auto& p = joint.credal()[k];
        Matrix m2(d, d, 0.0);
        std::vector<double> mean(d, 0.0);
        for (size_t i = 0; i < joint.support_size(); ++i) {
            const auto& pt = joint.support()[i];
            for (int a = 0; a < d; ++a) {
                mean[a] += p[i] * pt[d + a];
                for (int b = 0; b < d; ++b) m2(a, b) += p[i] * pt[a] * pt[b];
            }
        }
        pairs.push_back({std::move(mean), sym_sqrt(m2)});
    }
    return SupportSetTheta(d, std::move(pairs));
}

// phi(x, y) = 1/2 <A x, x> + <p, y> on R^{2d}
TestFunction quadratic_pair_function(std::vector<double> p, Matrix a, int d) {
    TestFunction f;
    f.arity = 2 * d;
    f.evaluator = [p = std::move(p), a = std::move(a), d](std::span<const double> xy) {
        double s = 0.5 * quadratic_form(a, xy.subspan(0, d));
        for (int i = 0; i < d; ++i) s += p[i] * xy[d + i];
        return s;
    };
    return f;
}

}  // namespace

GFunction GFunction::from_support(SupportSetTheta theta, Aggregation agg) {
    int d = theta.dim();
    return GFunction(d, std::move(theta), agg);
}

GFunction GFunction::from_marginals(const DiscreteUncertainDistribution& x,
                                    const DiscreteUncertainDistribution& y) {
    if (x.dim() != y.dim())
        throw_validation("G induced from marginals requires dim(X) = dim(Y)");
    GFunction g(x.dim(), derive_scenarios_marginal(x, y), Aggregation::kSup);
    g.tree_ = product(CompositionTree::leaf(x), CompositionTree::leaf(y));
    return g;
}

GFunction GFunction::from_joint(const DiscreteUncertainDistribution& joint) {
    if (joint.dim() % 2 != 0)
        throw_validation("joint pair distribution must have even dimension");
    int d = joint.dim() / 2;
    GFunction g(d, derive_scenarios_joint(joint, d), Aggregation::kSup);
    g.tree_ = CompositionTree::leaf(joint);
    return g;
}

double GFunction::eval(std::span<const double> p, const Matrix& a) const {
    if (static_cast<int>(p.size()) != dim_)
        throw_validation("G eval: vector argument dimension mismatch");
    if (a.rows() != dim_ || a.cols() != dim_)
        throw_validation("G eval: matrix argument dimension mismatch");
    if (!is_symmetric(a, kSymmetryTol))
        throw_validation("G eval: matrix argument must be symmetric within 1e-12");

    if (tree_) {
        std::vector<double> pv(p.begin(), p.end());
        return expect(*tree_, quadratic_pair_function(std::move(pv), a, dim_));
    }

    bool sup = (agg_ == Aggregation::kSup);
    double best = sup ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
    for (const auto& pr : theta_.pairs()) {
        Matrix cov = pr.cov_factor * pr.cov_factor.transposed();
        double v = 0.5 * trace_product(a, cov);
        for (int i = 0; i < dim_; ++i) v += p[i] * pr.mean[i];
        best = sup ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

double GFunction::eval(double p, double a) const {
    double pv[1] = {p};
    return eval(std::span<const double>(pv, 1), Matrix::scalar1x1(a));
}

double GFunction::mean_part(std::span<const double> p) const {
    return eval(p, Matrix(dim_, dim_, 0.0));
}

double GFunction::mean_part(double p) const { return eval(p, 0.0); }

double GFunction::cov_part(const Matrix& a) const {
    std::vector<double> zero(dim_, 0.0);
    return eval(std::span<const double>(zero), a);
}

double GFunction::cov_part(double a) const { return eval(0.0, a); }

std::vector<std::vector<double>> GFunction::mean_support() const {
    std::vector<std::vector<double>> out;
    out.reserve(theta_.pairs().size());
    for (const auto& pr : theta_.pairs()) out.push_back(pr.mean);
    return out;
}

std::vector<Matrix> GFunction::cov_support() const { return theta_.covariances(); }

GFunction g_from_distribution(const DiscreteUncertainDistribution& x,
                              const DiscreteUncertainDistribution& y) {
    return GFunction::from_marginals(x, y);
}

double maximal_expect(const std::vector<std::vector<double>>& points,
                      const TestFunction& phi) {
    if (points.empty()) throw_validation("maximal_expect requires a non-empty point set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& pt : points)
        best = std::max(best, phi(std::span<const double>(pt)));
    return best;
}

bool GPropertyReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

Matrix random_symmetric(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double v = nd(rng);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

std::vector<double> random_vector(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(d);
    for (double& x : v) x = nd(rng);
    return v;
}

std::string g_witness(const std::string& what, double lhs, double rhs) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": lhs=" << lhs << " rhs=" << rhs;
    return os.str();
}

}  // namespace

GPropertyReport check_g_properties(const GFunction& g, int samples, uint64_t seed) {
    if (samples < 1) throw_validation("check_g_properties requires samples >= 1");
    const double tol = 1e-10;
    int d = g.dim();
    std::mt19937_64 rng(seed);

    GPropertyCheck subadd{.property = "sub_additivity"};
    GPropertyCheck homog{.property = "positive_homogeneity"};
    GPropertyCheck mono{.property = "monotonicity_in_A"};

    for (int s = 0; s < samples; ++s) {
        auto p = random_vector(d, rng);
        auto pbar = random_vector(d, rng);
        Matrix a = random_symmetric(d, rng);
        Matrix abar = random_symmetric(d, rng);

        // sub-additivity
        std::vector<double> psum(d);
        for (int i = 0; i < d; ++i) psum[i] = p[i] + pbar[i];
        double lhs = g.eval(psum, a + abar);
        double rhs = g.eval(p, a) + g.eval(pbar, abar);
        ++subadd.checks;
        if (lhs > rhs + tol) {
            subadd.pass = false;
            if (subadd.witness.empty()) subadd.witness = g_witness("G(p+pbar,A+Abar)", lhs, rhs);
        }

        // positive homogeneity
        double gpa = g.eval(p, a);
        for (double lambda : {0.0, 1.0, 3.0}) {
            std::vector<double> lp(d);
            for (int i = 0; i < d; ++i) lp[i] = lambda * p[i];
            double l = g.eval(lp, a.scaled(lambda));
            ++homog.checks;
            if (std::abs(l - lambda * gpa) > tol) {
                homog.pass = false;
                if (homog.witness.empty())
                    homog.witness = g_witness("G(l p, l A), l=" + std::to_string(lambda), l,
                                              lambda * gpa);
            }
        }

        // monotonicity: Abar = A - c c^T <= A
        auto c = random_vector(d, rng);
        Matrix low = a - outer(c);
        double ga = g.eval(p, a);
        double glow = g.eval(p, low);
        ++mono.checks;
        if (ga < glow - tol) {
            mono.pass = false;
            if (mono.witness.empty()) mono.witness = g_witness("G(p,A) >= G(p,A-cc^T)", ga, glow);
        }
    }

    GPropertyReport report;
    report.checks = {subadd, homog, mono};
    return report;
}

std::optional<std::string> check_ellipticity(const GFunction& g, double beta,
                                             int samples, uint64_t seed) {
    int d = g.dim();
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        Matrix abar = random_symmetric(d, rng);
        // A = Abar + sum of rank-one bumps, so A >= Abar
        Matrix a = abar;
        std::uniform_int_distribution<int> nb(1, 3);
        int bumps = nb(rng);
        for (int b = 0; b < bumps; ++b) a = a + outer(random_vector(d, rng));
        double lhs = g.cov_part(a) - g.cov_part(abar);
        double rhs = 0.5 * beta * trace(a - abar);
        if (lhs < rhs - 1e-10) {
            std::ostringstream os;
            os.precision(17);
            os << "ellipticity violated at sample " << s << ": Ghat(A)-Ghat(Abar)=" << lhs
               << " < (beta/2) tr[A-Abar]=" << rhs;
            return os.str();
        }
    }
    return std::nullopt;
}

std::optional<std::string> check_declared_ellipticity(const GFunction& g, int samples,
                                                      uint64_t seed) {
    auto beta = g.scenarios().ellipticity_lower_bound();
    if (!beta || *beta <= 0.0) return std::nullopt;
    return check_ellipticity(g, *beta, samples, seed);
}

}  // namespace gexpect
