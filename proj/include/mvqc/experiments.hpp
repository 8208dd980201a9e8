#pragma once

/**
 * @file
 * Study drivers: gradient-variance sweeps, optimization ensembles and
 * landscape slices.
 *
 * Every sample draws from substream(seed, tag, index) so results do not
 * depend on the worker count or scheduling order.
 */

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mvqc/ansatz.hpp"
#include "mvqc/costgrad.hpp"
#include "mvqc/lbfgs.hpp"
#include "mvqc/observable.hpp"

namespace mvqc {

/// Runs f(i) for i in [0, count) on up to `workers` threads (workers <= 1 is
/// serial). The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f);

/// Hardware concurrency, at least 1.
[[nodiscard]] int default_workers();

struct ObservableSpec {
    ObservableKind kind = ObservableKind::ZZ01;
    double delta = 0.5;

    [[nodiscard]] Observable make(int n_qubits) const;
};

[[nodiscard]] std::string to_string(CostVariant v);
[[nodiscard]] CostVariant variant_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Gradient variance

struct VarianceConfig {
    AnsatzKind ansatz = AnsatzKind::HEA1;
    std::vector<int> n_list;
    int depth = 16;
    std::vector<double> p_grid;
    CostVariant variant = CostVariant::Projective;
    int n_samples = 1000;
    std::optional<std::size_t> grad_index; // default: template.first_repeated_slot()
    ObservableSpec observable;
    double delta = 0.5;                      // XXZ-HVA anisotropy
    std::size_t mixed_exact_max_sites = 10;  // above this the mixed gradient is sampled
    int mixed_inner_samples = 100;
    int bootstrap_resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct VarianceRow {
    AnsatzKind ansatz;
    int n;
    int depth;
    double p;
    CostVariant variant;
    std::size_t grad_index;
    double variance;
    double ci_low;
    double ci_high;
    int n_samples;
    std::uint64_t seed;
};

/// Gradient component samples for one (N, p) cell, in sample order.
[[nodiscard]] std::vector<double> gradient_samples(const VarianceConfig& cfg, int n, std::size_t p_index);

[[nodiscard]] std::vector<VarianceRow> variance_sweep(const VarianceConfig& cfg);

// ---------------------------------------------------------------------------
// Optimization

struct OptimizeConfig {
    AnsatzKind ansatz = AnsatzKind::HEA2;
    int n = 8;
    int depth = 20;
    double p = 0.0;
    ObservableSpec observable;
    double delta = 0.5;
    int n_traces = 10;
    LbfgsOptions lbfgs;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct OptimizationRun {
    std::size_t trace_id = 0;
    CircuitRealization realization;
    OutcomeRecord record; // sampled once at theta0, held fixed
    OptTrace trace;
};

/// One fresh realization per trace; the projective cost of the record drawn
/// at theta0 is minimized.
[[nodiscard]] std::vector<OptimizationRun> optimize_ensemble(const OptimizeConfig& cfg);

[[nodiscard]] OptimizationRun optimize_one(const OptimizeConfig& cfg, std::size_t trace_id);

// ---------------------------------------------------------------------------
// Landscape

struct LandscapeSlice {
    std::vector<double> center;
    std::vector<double> dir1;
    std::vector<double> dir2;
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<std::optional<double>> values; // row-major [alpha][beta]; empty on dead branches

    [[nodiscard]] const std::optional<double>& at(std::size_t i, std::size_t j) const {
        return values[i * betas.size() + j];
    }
};

/// Cost on theta* + a dir1 + b dir2 over [-extent, extent]^2. Directions are
/// isotropic Gaussian draws, Gram-Schmidt orthonormalized. `resolution` must be
/// odd and >= 11 so the center lies on the lattice.
[[nodiscard]] LandscapeSlice landscape_slice(const CostFunction& cost, std::span<const double> theta_star,
                                             double extent, int resolution, Rng& rng, int workers = 1);

} // namespace mvqc
