#include "gexpect/distribution.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gexpect/errors.hpp"

namespace gexpect {

DiscreteUncertainDistribution::DiscreteUncertainDistribution(
    int dim, std::vector<std::vector<double>> support,
    std::vector<std::vector<double>> credal)
    : dim_(dim), support_(std::move(support)), credal_(std::move(credal)) {
    if (dim_ <= 0) throw_validation("distribution dimension must be positive");
    if (support_.empty()) throw_validation("support must be non-empty");
    if (credal_.empty()) throw_validation("credal set must be non-empty");

    for (const auto& pt : support_) {
        if (static_cast<int>(pt.size()) != dim_)
            throw_validation("support point dimension does not match dim");
        for (double v : pt)
            if (!std::isfinite(v)) throw_validation("support point is not finite");
    }
    // pairwise distinct support points (exact comparison; duplicates in the
    // credal list are allowed, duplicate support points are not)
    for (size_t i = 0; i < support_.size(); ++i)
        for (size_t j = i + 1; j < support_.size(); ++j)
            if (support_[i] == support_[j])
                throw_validation("support points must be pairwise distinct");

    for (size_t k = 0; k < credal_.size(); ++k) {
        const auto& p = credal_[k];
        if (p.size() != support_.size())
            throw_validation("probability vector length must equal support size");
        double sum = 0.0;
        for (double v : p) {
            if (!(v >= 0.0))
                throw_validation("probability vector has a negative component");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kProbabilityTol) {
            std::ostringstream os;
            os << "credal vector " << k << " sums to " << sum
               << "; normalization invariant requires sum 1 within " << kProbabilityTol;
            throw_validation(os.str());
        }
    }
}

DiscreteUncertainDistribution DiscreteUncertainDistribution::scalar(
    std::vector<double> support, std::vector<std::vector<double>> credal) {
    std::vector<std::vector<double>> pts;
    pts.reserve(support.size());
    for (double v : support) pts.push_back({v});
    return DiscreteUncertainDistribution(1, std::move(pts), std::move(credal));
}

DiscreteUncertainDistribution DiscreteUncertainDistribution::point_mass(
    std::vector<double> point) {
    int d = static_cast<int>(point.size());
    return DiscreteUncertainDistribution(d, {std::move(point)}, {{1.0}});
}

double DiscreteUncertainDistribution::linear_expectation(
    size_t credal_index, const TestFunction& phi) const {
    const auto& p = credal_.at(credal_index);
    double s = 0.0;
    for (size_t i = 0; i < support_.size(); ++i)
        s += p[i] * phi(std::span<const double>(support_[i]));
    return s;
}

std::vector<double> DiscreteUncertainDistribution::mean_under(size_t credal_index) const {
    const auto& p = credal_.at(credal_index);
    std::vector<double> m(dim_, 0.0);
    for (size_t i = 0; i < support_.size(); ++i)
        for (int k = 0; k < dim_; ++k) m[k] += p[i] * support_[i][k];
    return m;
}

std::optional<std::string> check_growth(const TestFunction& phi, int dim,
                                        double radius, int samples, uint64_t seed) {
    if (!phi.lipschitz_bound) return std::nullopt;
    double c = *phi.lipschitz_bound;
    int m = phi.growth_exponent;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    std::vector<double> x(dim), y(dim);
    for (int s = 0; s < samples; ++s) {
        double nx = 0.0, ny = 0.0, dist2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            x[k] = u(rng);
            y[k] = u(rng);
            nx += x[k] * x[k];
            ny += y[k] * y[k];
            double d = x[k] - y[k];
            dist2 += d * d;
        }
        nx = std::sqrt(nx);
        ny = std::sqrt(ny);
        double lhs = std::abs(phi(std::span<const double>(x)) -
                              phi(std::span<const double>(y)));
        double rhs = c * (1.0 + std::pow(nx, m) + std::pow(ny, m)) * std::sqrt(dist2);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-14) {
            std::ostringstream os;
            os << "growth bound violated at sample " << s << ": |dphi|=" << lhs
               << " > bound " << rhs;
            return os.str();
        }
    }
    return std::nullopt;
}

}  // namespace gexpect
