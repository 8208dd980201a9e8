#pragma once

/**
 * @file
 * Circuit templates for the three layered ansatzes (HEA1, HEA2, XXZ-HVA),
 * their stochastic realizations (measurement placement, Pauli axes, angles)
 * and monitored execution.
 *
 * A template is an optional non-repeated preamble followed by `n_layers`
 * repeated layers. Measurement opportunities sit after every repeated layer
 * except the last, one per qubit. A realization pins which opportunities
 * carry a measurement.
 */

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mvqc/rng.hpp"
#include "mvqc/statevec.hpp"

namespace mvqc {

enum class AnsatzKind : std::uint8_t { HEA1, HEA2, XXZ_HVA };

[[nodiscard]] std::string to_string(AnsatzKind kind);
/// Accepts "hea1", "hea2", "xxz_hva" / "xxz-hva" / "xxz" (case-insensitive).
[[nodiscard]] AnsatzKind ansatz_from_string(std::string_view name);

/// Location of a gate inside a template; layer -1 is the preamble.
struct OpRef {
    int layer;
    std::size_t index;
    friend bool operator==(const OpRef&, const OpRef&) = default;
};

struct CircuitTemplate {
    AnsatzKind kind = AnsatzKind::HEA2;
    int n_qubits = 0;
    int n_layers = 0;
    double delta = 0.0; // exchange anisotropy (XXZ-HVA only)
    std::vector<GateSpec> preamble;
    std::vector<std::vector<GateSpec>> layers;
    std::size_t parameter_count = 0;
    /// slot -> every gate bound to it
    std::vector<std::vector<OpRef>> sharing_map;

    [[nodiscard]] const GateSpec& gate(const OpRef& ref) const;
    [[nodiscard]] std::size_t rotation_count() const;
    [[nodiscard]] std::size_t measurement_opportunities() const {
        return static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_layers - 1);
    }
    /// Lowest parameter slot used by the first repeated layer.
    [[nodiscard]] std::size_t first_repeated_slot() const;

    /// Copy in which every parameterized gate owns a private slot.
    /// `origin[new_slot]` is the slot the gate was bound to here.
    [[nodiscard]] std::pair<CircuitTemplate, std::vector<std::size_t>> unshared() const;
};

/// Random-axis rotations + periodic brickwork CNOTs; 2 n L parameters.
[[nodiscard]] CircuitTemplate build_hea1(int n_qubits, int n_layers, Rng& rng);
/// Shared-angle Y-rotation walls + periodic brickwork CNOTs; 2 L + 1 parameters.
[[nodiscard]] CircuitTemplate build_hea2(int n_qubits, int n_layers);
/// Singlet-product start + alternating odd/even exchange half-layers; 2 L parameters.
[[nodiscard]] CircuitTemplate build_xxz_hva(int n_qubits, int n_layers, double delta = 0.5);

[[nodiscard]] CircuitTemplate build_template(AnsatzKind kind, int n_qubits, int n_layers, Rng& rng,
                                             double delta = 0.5);

// ---------------------------------------------------------------------------
// Compiled program

/// Flattened gate with its template slot resolved (-1 when unparameterized).
struct Op {
    GateKind kind = GateKind::Cnot;
    Pauli axis = Pauli::Z;
    int q0 = 0;
    int q1 = 0;
    double delta = 0.0;
    std::ptrdiff_t slot = -1;
    std::size_t fixed = 0; // index into Program::fixed_gates
    std::size_t id = 0;    // position in program order
};

/// Gates of one repeated layer (the preamble is folded into segment 0)
/// followed by the measurements placed after that layer.
struct Segment {
    std::vector<Op> gates;
    std::vector<int> wall_qubits; // ascending
    std::size_t first_site = 0;   // index of wall_qubits[0] in the ordered site list
};

struct Program {
    int n_qubits = 0;
    std::size_t parameter_count = 0;
    std::vector<Segment> segments;
    std::vector<Mat4> fixed_gates;
    std::size_t op_count = 0;
    std::size_t site_count = 0;
};

/// Perturbation of one commuting generator factor of one gate, used by the
/// parameter-shift rule. Rotations have the single factor 0; exchange gates
/// have factors 0 (XX), 1 (YY) and 2 (delta ZZ).
struct Shift {
    std::size_t op_id = 0;
    int factor = 0;
    double amount = 0.0;
};

/// Commuting Pauli-class factor of a gate generator with eigenvalues +-coefficient.
struct ShiftFactor {
    int factor;
    double coefficient;
};

[[nodiscard]] std::vector<ShiftFactor> shift_factors(const Op& op);

void apply_op(State& psi, const Op& op, const Program& prog, std::span<const double> theta,
              const Shift* shift = nullptr);
void apply_op_adjoint(State& psi, const Op& op, const Program& prog, std::span<const double> theta);
/// psi <- A psi for the op's generator A (gate = exp(-i theta A / 2)).
void apply_op_generator(State& psi, const Op& op);

// ---------------------------------------------------------------------------
// Realizations

/// Measurement after repeated layer `layer` on `qubit`.
struct MeasSite {
    int layer;
    int qubit;
    friend auto operator<=>(const MeasSite&, const MeasSite&) = default;
};

class CircuitRealization {
  public:
    /// Validates and compiles. `pauli_axes` (HEA1 only, one per rotation in
    /// template order) overrides the template's axes; pass empty otherwise.
    CircuitRealization(CircuitTemplate tmpl, double meas_prob, std::vector<MeasSite> meas_sites,
                       std::vector<Pauli> pauli_axes, std::vector<double> theta, std::uint64_t seed);

    [[nodiscard]] const CircuitTemplate& circuit_template() const noexcept { return tmpl_; }
    [[nodiscard]] double meas_prob() const noexcept { return meas_prob_; }
    [[nodiscard]] const std::vector<MeasSite>& meas_sites() const noexcept { return sites_; }
    [[nodiscard]] const std::vector<Pauli>& pauli_axes() const noexcept { return axes_; }
    [[nodiscard]] const std::vector<double>& theta() const noexcept { return theta_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] int n_qubits() const noexcept { return tmpl_.n_qubits; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return tmpl_.parameter_count; }
    [[nodiscard]] const Program& program() const noexcept { return *program_; }

    /// Same realization with a different stored parameter vector.
    [[nodiscard]] CircuitRealization with_theta(std::vector<double> theta) const;

    /// Realization over the unshared template; theta is expanded so the
    /// circuit is unchanged. Returns the slot origin map as well.
    [[nodiscard]] std::pair<CircuitRealization, std::vector<std::size_t>> unshared() const;

  private:
    CircuitTemplate tmpl_;
    double meas_prob_;
    std::vector<MeasSite> sites_;
    std::vector<Pauli> axes_;
    std::vector<double> theta_;
    std::uint64_t seed_;
    std::shared_ptr<const Program> program_;
};

/// Draws HEA1 axes, then measurement sites (each opportunity independently
/// with probability p), then theta uniform on [-pi, pi], from Rng(seed).
[[nodiscard]] CircuitRealization realize(const CircuitTemplate& tmpl, double p, std::uint64_t seed);

[[nodiscard]] nlohmann::json to_json(const CircuitRealization& r);
[[nodiscard]] CircuitRealization realization_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Execution

struct OutcomeRecord {
    std::vector<std::uint8_t> outcomes;        // aligned with meas_sites
    std::vector<double> branch_probabilities;  // conditional, per site
    double joint_probability = 1.0;
    double log_probability = 0.0;              // natural log of joint_probability
};

/// Builds a record from bare outcomes (probabilities unset).
[[nodiscard]] OutcomeRecord make_record(std::vector<std::uint8_t> outcomes);

/// Branch probabilities below this are treated as dead.
inline constexpr double kDeadBranchEpsilon = 1e-12;

struct RunResult {
    State state; // normalized
    OutcomeRecord record;
};

/// Sample mode: outcomes drawn site by site by the Born rule.
[[nodiscard]] RunResult run(const CircuitRealization& r, std::span<const double> theta, Rng& rng);

/// Forced mode: project onto `record`'s outcomes, renormalizing after each.
/// Throws DeadBranchError when a forced branch probability is below
/// kDeadBranchEpsilon.
[[nodiscard]] RunResult run_forced(const CircuitRealization& r, std::span<const double> theta,
                                   const OutcomeRecord& record, const Shift* shift = nullptr);

/// Every outcome record of the realization in binary order (site 0 most
/// significant). Caller bounds the site count.
[[nodiscard]] std::vector<OutcomeRecord> all_records(std::size_t site_count);

} // namespace mvqc
