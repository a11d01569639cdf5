#pragma once

// Streaming estimators and estimate-vs-closed-form verdicts.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace selfish {

/// Acceptance band used throughout: three standard errors.
inline constexpr double kDefaultZ = 3.0;
/// Absolute slack added to every comparison so exact zero-variance cases pass.
inline constexpr double kAbsoluteFloor = 1e-12;

struct EstimateWithCI {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
    double z = kDefaultZ;
    double ci_low = 0.0;
    double ci_high = 0.0;

    static EstimateWithCI make(double mean, double std_error, std::uint64_t n, double z = kDefaultZ)
    {
        return {mean, std_error, n, z, mean - z * std_error, mean + z * std_error};
    }

    double width() const { return ci_high - ci_low; }
};

/// Welford accumulator with Chan et al. pairwise merge.
class RunningStats {
public:
    void add(double x)
    {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other)
    {
        if (other.n_ == 0)
            return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double n = na + nb;
        const double delta = other.mean_ - mean_;
        mean_ += delta * nb / n;
        m2_ += other.m2_ + delta * delta * na * nb / n;
        n_ += other.n_;
    }

    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double sum() const { return mean_ * static_cast<double>(n_); }

    /// Unbiased sample variance; requires at least two samples.
    double variance() const
    {
        if (n_ < 2)
            throw std::logic_error("variance needs at least two samples");
        return m2_ / static_cast<double>(n_ - 1);
    }

    double std_error() const { return std::sqrt(variance() / static_cast<double>(n_)); }

    EstimateWithCI estimate(double z = kDefaultZ) const { return EstimateWithCI::make(mean(), std_error(), n_, z); }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Totals of one batch of a renewal-reward run: reward sum over time sum
/// (or any other numerator/denominator pair).
struct RatioBatch {
    double numerator = 0.0;
    double denominator = 0.0;
};

inline constexpr std::size_t kMinRatioBatches = 8;

/// Ratio-of-sums point estimate with a batch-means standard error.
///
/// Residuals e_b = num_b - R * den_b are i.i.d. across batches with mean 0;
/// se(R) = sd(e) / (sqrt(B) * mean(den)).
inline EstimateWithCI ratio_estimate(std::span<const RatioBatch> batches, double z = kDefaultZ)
{
    if (batches.size() < kMinRatioBatches)
        throw std::invalid_argument("ratio estimate needs at least 8 batches");
    double num = 0.0;
    double den = 0.0;
    for (const auto& b : batches) {
        if (!(b.denominator > 0.0))
            throw std::invalid_argument("ratio estimate batch denominators must be positive");
        num += b.numerator;
        den += b.denominator;
    }
    if (!(den > 0.0))
        throw std::invalid_argument("ratio estimate total denominator is zero");
    const double ratio = num / den;
    const double count = static_cast<double>(batches.size());
    double ss = 0.0;
    for (const auto& b : batches) {
        const double e = b.numerator - ratio * b.denominator;
        ss += e * e;
    }
    const double mean_den = den / count;
    const double se = std::sqrt(ss / (count - 1.0) / count) / mean_den;
    return EstimateWithCI::make(ratio, se, batches.size(), z);
}

enum class Relation { Equal, AtMost, WithinRelative };

struct ComparisonVerdict {
    std::string quantity;
    Relation relation = Relation::Equal;
    double target = 0.0;
    EstimateWithCI estimate;
    double z_score = 0.0;
    bool pass = false;
    double tolerance = 0.0; ///< relative tolerance, WithinRelative only
};

inline double z_score_of(double mean, double target, double se)
{
    const double diff = mean - target;
    if (se > 0.0)
        return diff / se;
    if (std::abs(diff) <= kAbsoluteFloor)
        return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

/// Two-sided: |mean - target| <= z * se + floor.
inline ComparisonVerdict compare_equal(std::string quantity, double target, const EstimateWithCI& est)
{
    ComparisonVerdict v{std::move(quantity), Relation::Equal, target, est, z_score_of(est.mean, target, est.std_error), false};
    v.pass = std::abs(est.mean - target) <= est.z * est.std_error + kAbsoluteFloor;
    return v;
}

/// One-sided: mean <= bound + z * se + floor.
inline ComparisonVerdict compare_at_most(std::string quantity, double bound, const EstimateWithCI& est)
{
    ComparisonVerdict v{std::move(quantity), Relation::AtMost, bound, est, z_score_of(est.mean, bound, est.std_error), false};
    v.pass = est.mean <= bound + est.z * est.std_error + kAbsoluteFloor;
    return v;
}

/// |mean - target| <= tolerance * |target|; for quantities whose acceptance
/// band is a fixed relative error rather than a standard-error band.
inline ComparisonVerdict compare_relative(std::string quantity, double target, const EstimateWithCI& est,
                                          double tolerance)
{
    ComparisonVerdict v{std::move(quantity), Relation::WithinRelative, target, est,
                        z_score_of(est.mean, target, est.std_error), false, tolerance};
    v.pass = std::abs(est.mean - target) <= tolerance * std::abs(target);
    return v;
}

} // namespace selfish
