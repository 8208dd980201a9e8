#pragma once

/**
 * @file
 * Half-chain entanglement sweeps over monitored circuits and the
 * finite-size scaling collapse
 *
 *   y_N(p) = S(p, N) - S(p_c, N),   x = (p - p_c) N^{1/nu}.
 *
 * Entropy is always computed per post-selected pure state and then averaged.
 */

#include <cstdint>
#include <optional>
#include <vector>

#include "mvqc/ansatz.hpp"

namespace mvqc {

struct EntropyConfig {
    AnsatzKind ansatz = AnsatzKind::HEA2;
    std::vector<int> n_list;
    std::optional<int> depth; // default: 4 N
    std::vector<double> p_grid;
    int n_samples = 1000;
    double delta = 0.5;
    int bootstrap_resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    int workers = 1;

    [[nodiscard]] int depth_for(int n) const { return depth.value_or(4 * n); }
};

struct EntropyRow {
    AnsatzKind ansatz;
    int n;
    int depth;
    double p;
    double mean_entropy_bits;
    double ci_low;
    double ci_high;
    int n_samples;
    std::uint64_t seed;
};

struct EntropyTable {
    AnsatzKind ansatz = AnsatzKind::HEA2;
    std::vector<EntropyRow> rows;
};

/// Half-chain entropies of Born-sampled trajectories for one (N, p) cell.
[[nodiscard]] std::vector<double> entropy_samples(const EntropyConfig& cfg, int n, std::size_t p_index);

[[nodiscard]] EntropyTable entropy_sweep(const EntropyConfig& cfg);

struct CollapseOptions {
    std::optional<double> p_c0;
    std::optional<double> nu0;
    int restarts = 5;
    double jitter_p_c = 0.02;
    double jitter_nu = 0.1;
    double nu_min = 0.5;
    double nu_max = 3.0;
    std::uint64_t seed = 0;
};

struct CollapseEstimate {
    double p_c;
    double nu;
    double R;
};

struct CollapseFit {
    double p_c = 0.0;
    double nu = 0.0;
    double R = 0.0; // residual at (p_c, nu)
    double p_c_err = 0.0;
    double nu_err = 0.0;
    CollapseEstimate best;                  // scan + local search before restarts
    std::vector<CollapseEstimate> restarts;
    std::vector<std::pair<double, double>> mean_curve; // (x, ybar)
};

/// Collapse residual per shared-grid point; +inf when the curves share no
/// support. Exposed for diagnostics and tests.
[[nodiscard]] double collapse_residual(const EntropyTable& table, double p_c, double nu);

/// BracketError when fewer than three sizes are present or the estimate sits
/// on the p_c search bound.
[[nodiscard]] CollapseFit collapse_fit(const EntropyTable& table, const CollapseOptions& opts = {});

struct CollapseQuality {
    struct PerSize {
        int n;
        double rms;
    };
    std::vector<PerSize> per_size;
    double pooled_rms = 0.0;
    std::vector<int> flagged; // sizes with rms > 3 x pooled
};

[[nodiscard]] CollapseQuality collapse_quality(const CollapseFit& fit, const EntropyTable& table);

} // namespace mvqc
