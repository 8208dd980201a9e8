#pragma once

// Cost observables: Z0 Z1 and the periodic XXZ chain, applied matrix-free.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mvqc/statevec.hpp"

namespace mvqc {

enum class ObservableKind : std::uint8_t { ZZ01, XXZ };

class Observable {
  public:
    static Observable zz01(int n_qubits);
    /// sum_i X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}, bond (n-1, 0) included
    /// for n >= 3; a single bond for n = 2.
    static Observable xxz(int n_qubits, double delta);

    [[nodiscard]] ObservableKind kind() const noexcept { return kind_; }
    [[nodiscard]] int n_qubits() const noexcept { return n_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] std::string name() const;

    /// out <- O in. `out` is resized as needed and must not alias `in`.
    void apply(const State& in, State& out) const;
    [[nodiscard]] State apply(const State& in) const;

    /// <psi|O|psi> without normalization.
    [[nodiscard]] double quadratic_form(const State& psi) const;

    /// Smallest eigenvalue; computed once per observable value and shared by copies.
    /// Throws NumericalError if Lanczos does not converge.
    [[nodiscard]] double exact_ground_energy() const;

    /// True when O has exactly the two eigenvalues +-1 (a parity projector pair).
    [[nodiscard]] bool two_outcome() const noexcept { return kind_ == ObservableKind::ZZ01; }

    /// <psi|Pi_+|psi> for the +1 eigenprojector; UnsupportedError unless two_outcome().
    [[nodiscard]] double plus_weight(const State& psi) const;

  private:
    struct GroundCache;

    Observable(ObservableKind kind, int n, double delta);
    void check_dim(const State& psi) const;

    ObservableKind kind_;
    int n_;
    double delta_;
    std::vector<std::pair<std::size_t, std::size_t>> bonds_; // bit masks
    std::shared_ptr<GroundCache> ground_;
};

/// <psi|O|psi> for a normalized state; ContractError on a qubit-count mismatch.
[[nodiscard]] double expectation(const State& psi, const Observable& obs);

} // namespace mvqc
