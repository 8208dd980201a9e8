#pragma once

// Sample statistics and percentile bootstrap.

#include <cstdint>
#include <span>

namespace mvqc {

enum class Statistic : std::uint8_t { Mean, Variance };

[[nodiscard]] double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance; 0 for fewer than two samples.
[[nodiscard]] double sample_variance(std::span<const double> xs);

struct Interval {
    double point = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// Percentile bootstrap. The interval is widened to contain the point
/// estimate when the resampled percentiles miss it (skewed statistics).
[[nodiscard]] Interval bootstrap_ci(std::span<const double> xs, Statistic stat, int n_resamples, double level,
                                    std::uint64_t seed);

/// Standard deviation of the resampled means.
[[nodiscard]] double bootstrap_stderr(std::span<const double> xs, int n_resamples, std::uint64_t seed);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
[[nodiscard]] LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

} // namespace mvqc
