#include "mvqc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvqc/errors.hpp"
#include "mvqc/rng.hpp"

namespace mvqc {

namespace {

double evaluate(std::span<const double> xs, Statistic stat) {
    return stat == Statistic::Mean ? mean(xs) : sample_variance(xs);
}

// Linear interpolation between order statistics (type 7 quantile).
double quantile(std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ContractError("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    // Shifted by the first sample so identical inputs give exactly zero.
    const double k = xs[0];
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        s += x - k;
        s2 += (x - k) * (x - k);
    }
    const auto n = static_cast<double>(xs.size());
    return std::max(0.0, (s2 - s * s / n) / (n - 1.0));
}

Interval bootstrap_ci(std::span<const double> xs, Statistic stat, int n_resamples, double level,
                      std::uint64_t seed) {
    if (xs.size() < 2) throw ContractError("bootstrap needs at least two samples");
    if (!(level > 0.0 && level < 1.0)) throw ContractError("confidence level must lie in (0, 1)");
    if (n_resamples < 1) throw ContractError("bootstrap needs at least one resample");

    Interval out;
    out.point = evaluate(xs, stat);
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
    std::vector<double> draw(xs.size());
    std::vector<double> stats(static_cast<std::size_t>(n_resamples));
    for (auto& s : stats) {
        for (auto& d : draw) d = xs[pick(rng)];
        s = evaluate(draw, stat);
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    out.low = std::min(quantile(stats, tail), out.point);
    out.high = std::max(quantile(stats, 1.0 - tail), out.point);
    return out;
}

double bootstrap_stderr(std::span<const double> xs, int n_resamples, std::uint64_t seed) {
    if (xs.size() < 2) return 0.0;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
    std::vector<double> means(static_cast<std::size_t>(n_resamples));
    for (auto& m : means) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) acc += xs[pick(rng)];
        m = acc / static_cast<double>(xs.size());
    }
    return std::sqrt(sample_variance(means));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractError("linear fit needs two or more paired points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ContractError("linear fit needs distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

} // namespace mvqc
