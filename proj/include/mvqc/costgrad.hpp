#pragma once

/**
 * @file
 * Projective (post-selected) and mixed (outcome-averaged) cost functions and
 * their gradients.
 *
 * Analytic gradients use a reverse sweep over the compiled program: the
 * forward pass keeps a normalized checkpoint in front of every measurement
 * wall, and the backward pass carries the cotangent through each wall as
 * P phi / sqrt(q) with q the wall's conditional probability.
 *
 * Parameter-shift gradients shift one gate occurrence at a time. Exchange
 * gates are split into their commuting XX, YY and delta ZZ factors, each
 * shifted by pi / (2 r) for eigenvalues +-r.
 */

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mvqc/ansatz.hpp"
#include "mvqc/observable.hpp"

namespace mvqc {

using Gradient = std::vector<double>;

enum class CostVariant : std::uint8_t { Projective, Mixed };

struct CostValue {
    double value = 0.0;
    CostVariant variant = CostVariant::Projective;
    std::optional<OutcomeRecord> record; // projective only
    std::optional<double> std_error;     // sampled estimates only
};

/// Branch enumeration refuses realizations with more sites than this.
inline constexpr std::size_t kMaxEnumeratedSites = 16;

/// Mixed-cost enumeration drops branches whose joint probability is below
/// this; each dropped branch shifts the cost by at most |O| times it.
inline constexpr double kNegligibleBranch = 1e-30;

/// <psi_M|O|psi_M> / p_M for the forced record. DeadBranchError if any
/// conditional branch probability is below kDeadBranchEpsilon.
[[nodiscard]] CostValue projective_cost(const CircuitRealization& r, std::span<const double> theta,
                                        const OutcomeRecord& record, const Observable& obs);

/// sum_M <psi~_M|O|psi~_M>; CapacityError beyond kMaxEnumeratedSites.
[[nodiscard]] CostValue mixed_cost_exact(const CircuitRealization& r, std::span<const double> theta,
                                         const Observable& obs);

/// Mean of <O> over Born-sampled trajectories with a bootstrap standard error
/// (absent when n_samples == 1).
[[nodiscard]] CostValue mixed_cost_sampled(const CircuitRealization& r, std::span<const double> theta,
                                           const Observable& obs, int n_samples, Rng& rng);

[[nodiscard]] Gradient projective_grad_analytic(const CircuitRealization& r, std::span<const double> theta,
                                                const OutcomeRecord& record, const Observable& obs);

/// DeadBranchError::shift() names the offending shifted evaluation.
[[nodiscard]] Gradient projective_grad_paramshift(const CircuitRealization& r, std::span<const double> theta,
                                                  const OutcomeRecord& record, const Observable& obs);

enum class MixedGradMode : std::uint8_t { Exact, ParamShift };

/// Gradient of mixed_cost_exact, by weighted reverse sweeps over every
/// branch (Exact) or by shifting mixed_cost_exact (ParamShift).
[[nodiscard]] Gradient mixed_grad(const CircuitRealization& r, std::span<const double> theta,
                                  const Observable& obs, MixedGradMode mode);

/// Unbiased single-trajectory estimate 2 Re<O psi_M|d psi_M> averaged over
/// n_samples Born-sampled records.
[[nodiscard]] Gradient mixed_grad_sampled(const CircuitRealization& r, std::span<const double> theta,
                                          const Observable& obs, int n_samples, Rng& rng);

struct CostAndGradient {
    double cost = 0.0;
    Gradient gradient;
    OutcomeRecord record;
};

/// Projective cost and analytic gradient from one forward pass.
[[nodiscard]] CostAndGradient projective_cost_and_grad(const CircuitRealization& r, std::span<const double> theta,
                                                       const OutcomeRecord& record, const Observable& obs);

/// Draws a record by the Born rule at `theta` and differentiates C_M there.
[[nodiscard]] CostAndGradient sample_projective_grad(const CircuitRealization& r, std::span<const double> theta,
                                                     const Observable& obs, Rng& rng);

using CostFunction = std::function<double(std::span<const double>)>;

/// Central differences; h must lie in [1e-7, 1e-3].
[[nodiscard]] Gradient finite_difference_grad(const CostFunction& f, std::span<const double> theta, double h);

} // namespace mvqc
