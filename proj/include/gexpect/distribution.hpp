#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gexpect {

/// Tolerance for probability-vector normalization checks.
inline constexpr double kProbabilityTol = 1e-12;

enum class Convexity { kConvex, kConcave, kNeither, kUnknown };

/// A test function phi: R^k -> R together with declared growth metadata.
/// The metadata is not derived from the evaluator; it is caller-declared and
/// may be asserted by sampling (see check_growth).
struct TestFunction {
    std::function<double(std::span<const double>)> evaluator;
    int arity = -1;  // -1 = accepts any arity
    int growth_exponent = 0;
    std::optional<double> lipschitz_bound;
    bool bounded = false;
    Convexity convexity = Convexity::kUnknown;

    double operator()(std::span<const double> x) const { return evaluator(x); }
    double operator()(double x) const {
        double v[1] = {x};
        return evaluator(std::span<const double>(v, 1));
    }
    double operator()(double x, double y) const {
        double v[2] = {x, y};
        return evaluator(std::span<const double>(v, 2));
    }
};

/// Finitely supported distribution with uncertainty: a list of support points
/// in R^d plus a finite credal set of probability vectors over that support.
/// Immutable after construction; all invariants are enforced here.
class DiscreteUncertainDistribution {
public:
    DiscreteUncertainDistribution(int dim,
                                  std::vector<std::vector<double>> support,
                                  std::vector<std::vector<double>> credal);

    /// d=1 convenience: support given as scalars.
    static DiscreteUncertainDistribution scalar(std::vector<double> support,
                                                std::vector<std::vector<double>> credal);

    /// Deterministic variable (single support point, singleton credal).
    static DiscreteUncertainDistribution point_mass(std::vector<double> point);

    int dim() const { return dim_; }
    size_t support_size() const { return support_.size(); }
    const std::vector<std::vector<double>>& support() const { return support_; }
    const std::vector<std::vector<double>>& credal() const { return credal_; }

    bool singleton_credal() const { return credal_.size() == 1; }

    /// Classical expectation of phi under one credal vector.
    double linear_expectation(size_t credal_index, const TestFunction& phi) const;

    /// Mean vector under one credal vector.
    std::vector<double> mean_under(size_t credal_index) const;

private:
    int dim_;
    std::vector<std::vector<double>> support_;
    std::vector<std::vector<double>> credal_;
};

/// The four parameters of a one-dimensional uncertain distribution:
/// mean interval [mean_lower, mean_upper] and variance(-proxy) interval
/// [var_lower, var_upper] given by the second moments.
struct UncertaintyParameters {
    double mean_upper = 0.0;
    double mean_lower = 0.0;
    double var_upper = 0.0;
    double var_lower = 0.0;
};

/// Samples pairs (x, y) and checks the declared local-Lipschitz growth bound
/// |phi(x)-phi(y)| <= C (1+|x|^m+|y|^m) |x-y|. Returns an empty optional on
/// success, otherwise a description of the first violating pair.
std::optional<std::string> check_growth(const TestFunction& phi, int dim,
                                        double radius, int samples, uint64_t seed);

}  // namespace gexpect
