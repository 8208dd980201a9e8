#pragma once

/**
 * @file
 * Dense statevector engine: gate kernels, projective measurement, partial
 * trace and entanglement entropy.
 *
 * Qubit 0 is the most-significant bit of the amplitude index, so for n qubits
 * the amplitude of |b_0 b_1 ... b_{n-1}> lives at index sum_q b_q 2^(n-1-q).
 */

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvqc/rng.hpp"

namespace mvqc {

using cplx = std::complex<double>;

/// Row-major 2x2 matrix.
using Mat2 = std::array<cplx, 4>;
/// Row-major 4x4 matrix in the basis |q0 q1> = |00>, |01>, |10>, |11>.
using Mat4 = std::array<cplx, 16>;

using DensityMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxQubits = 24;

enum class Pauli : std::uint8_t { X, Y, Z };

[[nodiscard]] char to_char(Pauli p) noexcept;
/// Parses 'X', 'Y' or 'Z'; throws ContractError otherwise.
[[nodiscard]] Pauli pauli_from_char(char c);

/// Bit mask selecting `qubit` in an n-qubit amplitude index.
[[nodiscard]] constexpr std::size_t qubit_mask(int n_qubits, int qubit) noexcept {
    return std::size_t{1} << (n_qubits - 1 - qubit);
}

class State {
  public:
    /// |0...0> on `n_qubits` qubits; throws SizeError outside [1, kMaxQubits].
    explicit State(int n_qubits);

    /// Takes ownership of an amplitude vector whose length must be a power of two.
    static State from_amplitudes(std::vector<cplx> amplitudes);

    [[nodiscard]] int n_qubits() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amps_.size(); }

    [[nodiscard]] std::span<cplx> amplitudes() noexcept { return amps_; }
    [[nodiscard]] std::span<const cplx> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] cplx& operator[](std::size_t i) noexcept { return amps_[i]; }
    [[nodiscard]] const cplx& operator[](std::size_t i) const noexcept { return amps_[i]; }

    /// Squared norm, recomputed from the amplitudes.
    [[nodiscard]] double norm_squared() const noexcept;

    /// Rescales to unit norm. Throws NumericalError on the zero vector.
    void normalize();

    void scale(double factor) noexcept;

    /// <this|other>
    [[nodiscard]] cplx inner(const State& other) const;

  private:
    State(int n, std::vector<cplx> amps) : n_(n), amps_(std::move(amps)) {}

    int n_;
    std::vector<cplx> amps_;
};

[[nodiscard]] State new_zero_state(int n_qubits);

// ---------------------------------------------------------------------------
// Matrices

[[nodiscard]] Mat2 pauli_matrix(Pauli p) noexcept;
/// exp(-i theta P / 2)
[[nodiscard]] Mat2 rotation_matrix(Pauli axis, double theta) noexcept;

/// exp(-i/2 (theta_xx XX + theta_yy YY + delta theta_zz ZZ)); the three
/// factors commute, so equal angles give exp(-i theta (XX + YY + delta ZZ) / 2).
[[nodiscard]] Mat4 exchange_matrix(double delta, double theta_xx, double theta_yy,
                                   double theta_zz) noexcept;
/// XX + YY + delta ZZ
[[nodiscard]] Mat4 exchange_generator(double delta) noexcept;

/// Unitary taking |00> to the singlet (|01> - |10>)/sqrt(2).
[[nodiscard]] Mat4 singlet_preparation() noexcept;

[[nodiscard]] Mat2 adjoint(const Mat2& m) noexcept;
[[nodiscard]] Mat4 adjoint(const Mat4& m) noexcept;

// ---------------------------------------------------------------------------
// In-place kernels. Qubit indices are not range-checked here; GateSpec-level
// entry points validate.

void apply_1q(State& psi, int qubit, const Mat2& m) noexcept;
void apply_2q(State& psi, int q0, int q1, const Mat4& m) noexcept;
void apply_cnot(State& psi, int control, int target) noexcept;
void apply_pauli(State& psi, int qubit, Pauli p) noexcept;
void apply_rotation(State& psi, int qubit, Pauli axis, double theta) noexcept;
void apply_exchange(State& psi, int q0, int q1, double delta, double theta_xx, double theta_yy,
                    double theta_zz) noexcept;
/// psi <- (XX + YY + delta ZZ) psi on the bond (q0, q1).
void apply_exchange_generator(State& psi, int q0, int q1, double delta) noexcept;

// ---------------------------------------------------------------------------
// Gates

enum class GateKind : std::uint8_t { Rotation, Cnot, Fixed2q, Exchange };

struct GateSpec {
    GateKind kind = GateKind::Cnot;
    std::array<int, 2> targets{0, 0};
    Pauli axis = Pauli::Z;      // Rotation only
    double delta = 0.0;         // Exchange anisotropy
    Mat4 fixed{};               // Fixed2q only
    std::optional<std::size_t> parameter_slot;

    [[nodiscard]] bool parameterized() const noexcept {
        return kind == GateKind::Rotation || kind == GateKind::Exchange;
    }

    static GateSpec rotation(int qubit, Pauli axis, std::optional<std::size_t> slot = {});
    static GateSpec cnot(int control, int target);
    static GateSpec fixed_2q(int q0, int q1, const Mat4& unitary);
    static GateSpec exchange(int q0, int q1, double delta, std::optional<std::size_t> slot = {});
};

/// Applies `gate` in place. `theta` must be supplied iff the gate is
/// parameterized (ContractError otherwise).
void apply_gate_inplace(State& psi, const GateSpec& gate, std::optional<double> theta);

[[nodiscard]] State apply_gate(State psi, const GateSpec& gate, std::optional<double> theta);

// ---------------------------------------------------------------------------
// Measurement

/// <psi|P_outcome|psi> on `qubit`.
[[nodiscard]] double branch_probability(const State& psi, int qubit, int outcome);

/// Zeroes the amplitudes inconsistent with `outcome`; no renormalization.
void project_inplace(State& psi, int qubit, int outcome) noexcept;

struct Projection {
    State state;          // P_outcome |psi>, not renormalized
    double probability;   // <psi|P_outcome|psi>
};

[[nodiscard]] Projection project(const State& psi, int qubit, int outcome);

struct Measurement {
    int outcome;
    State state;          // renormalized post-measurement state
    double probability;   // probability of the drawn branch
};

/// Born-rule draw on one qubit. Throws CorruptedStateError if both branch
/// probabilities are below 1e-15.
[[nodiscard]] Measurement measure_qubit(const State& psi, int qubit, Rng& rng);

/// In-place variant of measure_qubit; returns (outcome, branch probability).
std::pair<int, double> measure_qubit_inplace(State& psi, int qubit, Rng& rng);

// ---------------------------------------------------------------------------
// Entanglement

struct EntropyResult {
    std::vector<int> subsystem;
    double entropy_bits = 0.0;
};

/// rho_A = Tr_{complement}|psi><psi|; subsystem order defines the row index
/// (first listed qubit is most significant). Subsystem must be a nonempty
/// proper subset.
[[nodiscard]] DensityMatrix reduced_density(const State& psi, std::span<const int> subsystem);

/// -Tr[rho log2 rho]; eigenvalues below 1e-12 contribute nothing.
[[nodiscard]] double von_neumann_entropy(const DensityMatrix& rho);

/// Entropy of `subsystem` from the Schmidt spectrum of the amplitude reshape.
[[nodiscard]] EntropyResult entanglement_entropy(const State& psi, std::span<const int> subsystem);

/// Contiguous qubits [0, n/2).
[[nodiscard]] std::vector<int> half_chain(int n_qubits);

} // namespace mvqc
