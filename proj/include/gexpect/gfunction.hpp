#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexpect/composition.hpp"
#include "gexpect/small_linalg.hpp"

namespace gexpect {

/// Entrywise symmetry tolerance for the matrix argument of G.
inline constexpr double kSymmetryTol = 1e-12;

/// One scenario: a mean vector q and a covariance factor Q (so Q Q^T is the
/// covariance of that scenario).
struct ScenarioPair {
    std::vector<double> mean;  // q in R^d
    Matrix cov_factor;         // Q, d x d
};

/// Finite scenario set Theta of (mean, covariance-factor) pairs.
/// `ellipticity_lower_bound` is declared metadata (a lower bound beta on the
/// uniform ellipticity of the induced covariance part); it is verified by
/// sampling in check_ellipticity, never inferred.
class SupportSetTheta {
public:
    SupportSetTheta(int dim, std::vector<ScenarioPair> pairs,
                    std::optional<double> ellipticity_lower_bound = std::nullopt);

    /// Builds from (mean, covariance) pairs; stores the principal square root
    /// of each symmetric PSD covariance.
    static SupportSetTheta from_covariances(
        int dim, const std::vector<std::pair<std::vector<double>, Matrix>>& entries,
        std::optional<double> ellipticity_lower_bound = std::nullopt);

    int dim() const { return dim_; }
    const std::vector<ScenarioPair>& pairs() const { return pairs_; }
    std::optional<double> ellipticity_lower_bound() const { return beta_; }

    /// Covariances Q Q^T of all scenarios.
    std::vector<Matrix> covariances() const;

    /// Largest covariance eigenvalue over scenarios (CFL input).
    double sigma2_max() const;
    /// Largest mean norm over scenarios (CFL input).
    double q_max() const;

private:
    int dim_;
    std::vector<ScenarioPair> pairs_;
    std::optional<double> beta_;
};

enum class Aggregation { kSup, kInf };

/// The sublinear Hamiltonian G(p, A). Two representations are kept distinct
/// on purpose:
///   - support form: finite max (or min) over a scenario set Theta of
///     1/2 tr[A Q Q^T] + <p, q>;
///   - induced form: credal expectation of 1/2 <A X, X> + <p, Y> over a
///     stored composition tree for the pair (X, Y).
/// For an induced G an exactly equivalent scenario set is derived at
/// construction (finite credal sets admit one); eval() still goes through the
/// expectation so the two routes stay independent and can be cross-checked.
class GFunction {
public:
    static GFunction from_support(SupportSetTheta theta, Aggregation agg = Aggregation::kSup);

    /// Induced from marginals; the joint is product(X, Y) with Y entering as
    /// the inner (independent) factor.
    static GFunction from_marginals(const DiscreteUncertainDistribution& x,
                                    const DiscreteUncertainDistribution& y);

    /// Induced from a joint distribution of dimension 2d (first d coordinates
    /// are X, last d are Y) carrying a single credal set.
    static GFunction from_joint(const DiscreteUncertainDistribution& joint);

    int dim() const { return dim_; }
    bool induced() const { return tree_.has_value(); }
    Aggregation aggregation() const { return agg_; }

    double eval(std::span<const double> p, const Matrix& a) const;
    double eval(double p, double a) const;  // d = 1 convenience

    /// G(p, 0)
    double mean_part(std::span<const double> p) const;
    double mean_part(double p) const;
    /// G(0, A)
    double cov_part(const Matrix& a) const;
    double cov_part(double a) const;

    /// Scenario set: the stored Theta for a support-form G, or the derived
    /// exact equivalent for an induced G.
    const SupportSetTheta& scenarios() const { return theta_; }

    /// Projected mean set (the points q over Theta).
    std::vector<std::vector<double>> mean_support() const;
    /// Projected covariance set (the matrices Q Q^T over Theta).
    std::vector<Matrix> cov_support() const;

private:
    GFunction(int dim, SupportSetTheta theta, Aggregation agg)
        : dim_(dim), theta_(std::move(theta)), agg_(agg) {}

    int dim_;
    SupportSetTheta theta_;
    Aggregation agg_;
    std::optional<CompositionTree> tree_;  // set for induced form
};

/// Induced G from a distribution pair (marginals; the joint is product(X,Y)).
GFunction g_from_distribution(const DiscreteUncertainDistribution& x,
                              const DiscreteUncertainDistribution& y);

/// Expectation under the maximal (worst-case) distribution on a finite point
/// set: the plain maximum of phi over the listed points.
double maximal_expect(const std::vector<std::vector<double>>& points,
                      const TestFunction& phi);

struct GPropertyCheck {
    std::string property;
    bool pass = true;
    long checks = 0;
    std::string witness;
};

struct GPropertyReport {
    std::vector<GPropertyCheck> checks;
    bool all_pass() const;
};

/// Samples (p, A, pbar, Abar) and verifies sub-additivity, positive
/// homogeneity (lambda in {0, 1, 3}) and monotonicity in A (tested against
/// Abar = A - c c^T), all within 1e-10.
GPropertyReport check_g_properties(const GFunction& g, int samples, uint64_t seed = 12345);

/// Verifies on sampled pairs A >= Abar that the covariance part satisfies
/// Ghat(A) - Ghat(Abar) >= (beta/2) tr[A - Abar]. Returns an empty optional
/// on success, otherwise a witness description.
std::optional<std::string> check_ellipticity(const GFunction& g, double beta,
                                             int samples, uint64_t seed = 12345);

/// Same check against the scenario set's declared ellipticity_lower_bound;
/// trivially passes when no bound was declared or it is zero.
std::optional<std::string> check_declared_ellipticity(const GFunction& g, int samples,
                                                      uint64_t seed = 12345);

}  // namespace gexpect
