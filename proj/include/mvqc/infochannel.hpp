#pragma once

/**
 * @file
 * Sample-average estimators of the mutual information between Alice's
 * parameters theta ~ p_A and Bob's outcome i (and, when Bob sees them, the
 * mid-circuit record m).
 *
 *   I(A,B) = -E_{theta, i} log2 [ p_B(i) / p(i|theta) ]
 *
 * p_B is the plug-in average of p(.|theta_a) over the outer theta pool. No
 * estimator ever references a theta bin count. Every outer draw a owns the
 * substream (seed, tag, a), so results do not depend on the worker count.
 */

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvqc/ansatz.hpp"
#include "mvqc/observable.hpp"
#include "mvqc/rng.hpp"

namespace mvqc {

using MeasRecord = std::vector<std::uint8_t>;

/// Joint weight of a record and Bob's conditional distribution given it.
struct BranchProbs {
    double p_m = 0.0;
    std::vector<double> p_i_given_m; // empty when p_m == 0
};

/// Channel with intermediate measurements whose records m Bob may or may not see.
struct NestedSampler {
    std::function<MeasRecord(std::span<const double> theta, Rng& rng)> sample_m;
    /// Zero weight (and empty conditional) for dead records.
    std::function<BranchProbs(std::span<const double> theta, const MeasRecord& m)> branch;
};

struct ChannelSampler {
    int n_outcomes = 2;
    std::function<std::vector<double>(Rng& rng)> draw_theta;
    /// Marginal p(i|theta); sums to 1.
    std::function<std::vector<double>(std::span<const double> theta)> outcome_probs;
    std::optional<NestedSampler> nested;
};

struct MIEstimate {
    double bits = 0.0;
    double std_error = 0.0;
    int n_a = 0;
    int n_b = 0;
    int n_c = 0;                 // 0 for the noiseless estimator
    std::size_t clamped = 0;     // probabilities raised to the 1e-300 floor
    bool below_noise = false;    // bits < -3 std_error: more than estimator noise
};

/// Probabilities below this are raised to it inside log ratios.
inline constexpr double kProbabilityFloor = 1e-300;

struct MIOptions {
    int bootstrap_resamples = 200;
    std::uint64_t seed = 0;
    int workers = 1;
};

[[nodiscard]] MIEstimate mi_noiseless(const ChannelSampler& ch, int n_a, int n_b, const MIOptions& opts = {});

/// Bob sees (i, m). ContractError without a nested sampler.
[[nodiscard]] MIEstimate mi_aware(const ChannelSampler& ch, int n_a, int n_b, int n_c, const MIOptions& opts = {});

/// Bob sees i only; p(i|theta_a) is marginalized over n_c sampled records.
/// Equals mi_noiseless draw for draw when the record is always empty.
[[nodiscard]] MIEstimate mi_unaware(const ChannelSampler& ch, int n_a, int n_b, int n_c, const MIOptions& opts = {});

// ---------------------------------------------------------------------------
// Channels

/// Bob measures the parity of qubits 0 and 1 (outcome 0 is +1) on the final
/// state of `r`, theta uniform on [-pi, pi]^d. With measurement sites the
/// nested sampler is the Born distribution over records; the marginal
/// outcome_probs then enumerates records (CapacityError beyond
/// kMaxEnumeratedSites). UnsupportedError unless obs.two_outcome().
[[nodiscard]] ChannelSampler channel_from_circuit(const CircuitRealization& r, const Observable& obs);

/// Alice picks row k uniformly (theta = {k}); p(i|k) = table[k][i].
[[nodiscard]] ChannelSampler table_channel(std::vector<std::vector<double>> table);

/// Alice picks k uniformly; record m ~ p_m[k][m], then i ~ p_i[k][m][i].
/// Records are single symbols {m}.
[[nodiscard]] ChannelSampler nested_table_channel(std::vector<std::vector<double>> p_m,
                                                  std::vector<std::vector<std::vector<double>>> p_i);

/// theta uniform on [-pi, pi]^d, p(i|theta) = f(theta).
[[nodiscard]] ChannelSampler function_channel(
    std::size_t n_params, int n_outcomes, std::function<std::vector<double>(std::span<const double>)> f);

/// Exact MI in bits for a uniform prior over the rows of a table.
[[nodiscard]] double exact_mi(const std::vector<std::vector<double>>& table);
/// Exact MI of (i, m) for a nested table.
[[nodiscard]] double exact_mi_aware(const std::vector<std::vector<double>>& p_m,
                                    const std::vector<std::vector<std::vector<double>>>& p_i);
/// Exact MI of i alone for a nested table.
[[nodiscard]] double exact_mi_unaware(const std::vector<std::vector<double>>& p_m,
                                      const std::vector<std::vector<std::vector<double>>>& p_i);

// ---------------------------------------------------------------------------
// Sweeps

enum class MIEstimator : std::uint8_t { Noiseless, Aware, Unaware };

[[nodiscard]] std::string to_string(MIEstimator e);
[[nodiscard]] MIEstimator mi_estimator_from_string(const std::string& s);

struct MIConfig {
    AnsatzKind ansatz = AnsatzKind::HEA2;
    std::vector<int> n_list;
    std::vector<int> depths;  // empty: 1, 2, 4, ... below 4N, then 4N
    double p = 0.0;
    MIEstimator estimator = MIEstimator::Noiseless;
    int n_a = 2000;
    int n_b = 2000;
    int n_c = 0;              // aware / unaware only
    double delta = 0.5;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct MIRow {
    AnsatzKind ansatz;
    int n;
    int depth;
    double p;
    MIEstimator estimator;
    double bits;
    double std_error;
    int n_a;
    int n_b;
    int n_c;
    std::uint64_t seed;
};

[[nodiscard]] std::vector<int> default_mi_depths(int n);

/// One fixed realization per (N, depth); Bob measures Z0 Z1.
[[nodiscard]] std::vector<MIRow> mi_depth_sweep(const MIConfig& cfg);

} // namespace mvqc
