#include "mvqc/statevec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mvqc/errors.hpp"

namespace mvqc {

namespace {

constexpr cplx kI{0.0, 1.0};

void check_qubit(const State& psi, int q) {
    if (q < 0 || q >= psi.n_qubits()) {
        throw ContractError("qubit index " + std::to_string(q) + " out of range for " +
                            std::to_string(psi.n_qubits()) + "-qubit state");
    }
}

// Visits every index whose bits `lo` and `hi` (masks, lo < hi) are both zero.
template <class F>
inline void for_each_pair_base(std::size_t dim, std::size_t lo, std::size_t hi, F&& f) {
    for (std::size_t a = 0; a < dim; a += 2 * hi) {
        for (std::size_t b = a; b < a + hi; b += 2 * lo) {
            for (std::size_t i = b; i < b + lo; ++i) f(i);
        }
    }
}

// Row/column split of the amplitude index for a bipartition (A, complement).
struct Bipartition {
    std::vector<std::size_t> a_masks; // full-index masks for A, most significant first
    std::vector<std::size_t> b_masks;
    std::size_t a_dim;
    std::size_t b_dim;

    Bipartition(int n, std::span<const int> subsystem) {
        if (subsystem.empty() || static_cast<int>(subsystem.size()) >= n) {
            throw ContractError("subsystem must be a nonempty proper subset of the qubits");
        }
        std::vector<bool> in_a(static_cast<std::size_t>(n), false);
        for (int q : subsystem) {
            if (q < 0 || q >= n) throw ContractError("subsystem qubit out of range");
            if (in_a[static_cast<std::size_t>(q)]) throw ContractError("duplicate qubit in subsystem");
            in_a[static_cast<std::size_t>(q)] = true;
            a_masks.push_back(qubit_mask(n, q));
        }
        for (int q = 0; q < n; ++q) {
            if (!in_a[static_cast<std::size_t>(q)]) b_masks.push_back(qubit_mask(n, q));
        }
        a_dim = std::size_t{1} << a_masks.size();
        b_dim = std::size_t{1} << b_masks.size();
    }

    static std::size_t gather(std::size_t x, const std::vector<std::size_t>& masks) {
        std::size_t r = 0;
        for (auto m : masks) r = (r << 1) | ((x & m) ? 1U : 0U);
        return r;
    }

    [[nodiscard]] Eigen::MatrixXcd reshape(const State& psi) const {
        Eigen::MatrixXcd m(static_cast<Eigen::Index>(a_dim), static_cast<Eigen::Index>(b_dim));
        const auto amps = psi.amplitudes();
        for (std::size_t x = 0; x < amps.size(); ++x) {
            m(static_cast<Eigen::Index>(gather(x, a_masks)),
              static_cast<Eigen::Index>(gather(x, b_masks))) = amps[x];
        }
        return m;
    }
};

double entropy_from_spectrum(const Eigen::VectorXd& eigenvalues) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double lambda = eigenvalues[i];
        if (lambda > 1e-12) s -= lambda * std::log2(lambda);
    }
    return std::max(s, 0.0);
}

} // namespace

char to_char(Pauli p) noexcept {
    switch (p) {
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
    }
    return '?';
}

Pauli pauli_from_char(char c) {
    switch (c) {
    case 'X': case 'x': return Pauli::X;
    case 'Y': case 'y': return Pauli::Y;
    case 'Z': case 'z': return Pauli::Z;
    default: throw ContractError(std::string("not a Pauli axis: ") + c);
    }
}

// ---------------------------------------------------------------------------
// State

State::State(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw SizeError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                        std::to_string(kMaxQubits) + "]");
    }
    amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = 1.0;
}

State State::from_amplitudes(std::vector<cplx> amplitudes) {
    const auto len = amplitudes.size();
    if (len < 2 || !std::has_single_bit(len)) {
        throw SizeError("amplitude vector length must be a power of two >= 2");
    }
    const int n = std::countr_zero(len);
    if (n > kMaxQubits) throw SizeError("too many qubits");
    return State(n, std::move(amplitudes));
}

double State::norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
}

void State::normalize() {
    const double ns = norm_squared();
    if (!(ns > 0.0)) throw NumericalError("cannot normalize the zero vector");
    scale(1.0 / std::sqrt(ns));
}

void State::scale(double factor) noexcept {
    for (auto& a : amps_) a *= factor;
}

cplx State::inner(const State& other) const {
    if (other.dim() != dim()) throw ContractError("inner product of states with different sizes");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < amps_.size(); ++i) s += std::conj(amps_[i]) * other.amps_[i];
    return s;
}

State new_zero_state(int n_qubits) { return State(n_qubits); }

// ---------------------------------------------------------------------------
// Matrices

Mat2 pauli_matrix(Pauli p) noexcept {
    switch (p) {
    case Pauli::X: return {0.0, 1.0, 1.0, 0.0};
    case Pauli::Y: return {0.0, -kI, kI, 0.0};
    case Pauli::Z: break;
    }
    return {1.0, 0.0, 0.0, -1.0};
}

Mat2 rotation_matrix(Pauli axis, double theta) noexcept {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    switch (axis) {
    case Pauli::X: return {c, -kI * s, -kI * s, c};
    case Pauli::Y: return {c, -s, s, c};
    case Pauli::Z: break;
    }
    return {std::polar(1.0, -0.5 * theta), 0.0, 0.0, std::polar(1.0, 0.5 * theta)};
}

Mat4 exchange_matrix(double delta, double theta_xx, double theta_yy, double theta_zz) noexcept {
    // {|00>,|11>}: XX = sx, YY = -sx, ZZ = +1.  {|01>,|10>}: XX = YY = sx, ZZ = -1.
    const cplx ph1 = std::polar(1.0, -0.5 * delta * theta_zz);
    const cplx ph2 = std::polar(1.0, 0.5 * delta * theta_zz);
    const double a1 = 0.5 * (theta_xx - theta_yy);
    const double a2 = 0.5 * (theta_xx + theta_yy);
    Mat4 m{};
    m[0 * 4 + 0] = ph1 * std::cos(a1);
    m[0 * 4 + 3] = ph1 * (-kI * std::sin(a1));
    m[3 * 4 + 0] = ph1 * (-kI * std::sin(a1));
    m[3 * 4 + 3] = ph1 * std::cos(a1);
    m[1 * 4 + 1] = ph2 * std::cos(a2);
    m[1 * 4 + 2] = ph2 * (-kI * std::sin(a2));
    m[2 * 4 + 1] = ph2 * (-kI * std::sin(a2));
    m[2 * 4 + 2] = ph2 * std::cos(a2);
    return m;
}

Mat4 exchange_generator(double delta) noexcept {
    Mat4 m{};
    m[0] = delta;
    m[15] = delta;
    m[1 * 4 + 1] = -delta;
    m[2 * 4 + 2] = -delta;
    m[1 * 4 + 2] = 2.0;
    m[2 * 4 + 1] = 2.0;
    return m;
}

Mat4 singlet_preparation() noexcept {
    const double r = 1.0 / std::sqrt(2.0);
    const Mat2 h{r, r, r, -r};
    Mat4 m{};
    for (int col = 0; col < 4; ++col) {
        State s(2);
        s[0] = 0.0;
        s[static_cast<std::size_t>(col)] = 1.0;
        apply_pauli(s, 0, Pauli::X);
        apply_pauli(s, 1, Pauli::X);
        apply_1q(s, 0, h);
        apply_cnot(s, 0, 1);
        for (int row = 0; row < 4; ++row) m[static_cast<std::size_t>(row * 4 + col)] = s[static_cast<std::size_t>(row)];
    }
    return m;
}

Mat2 adjoint(const Mat2& m) noexcept {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

Mat4 adjoint(const Mat4& m) noexcept {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[static_cast<std::size_t>(i * 4 + j)] = std::conj(m[static_cast<std::size_t>(j * 4 + i)]);
    return r;
}

// ---------------------------------------------------------------------------
// Kernels

void apply_1q(State& psi, int qubit, const Mat2& m) noexcept {
    auto* a = psi.amplitudes().data();
    const std::size_t dim = psi.dim();
    const std::size_t stride = qubit_mask(psi.n_qubits(), qubit);
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) {
            const cplx a0 = a[j];
            const cplx a1 = a[j + stride];
            a[j] = m[0] * a0 + m[1] * a1;
            a[j + stride] = m[2] * a0 + m[3] * a1;
        }
    }
}

void apply_2q(State& psi, int q0, int q1, const Mat4& m) noexcept {
    auto* a = psi.amplitudes().data();
    const int n = psi.n_qubits();
    const std::size_t m0 = qubit_mask(n, q0);
    const std::size_t m1 = qubit_mask(n, q1);
    for_each_pair_base(psi.dim(), std::min(m0, m1), std::max(m0, m1), [&](std::size_t i) {
        const std::size_t idx[4] = {i, i | m1, i | m0, i | m0 | m1};
        const cplx v[4] = {a[idx[0]], a[idx[1]], a[idx[2]], a[idx[3]]};
        for (int r = 0; r < 4; ++r) {
            const cplx* row = &m[static_cast<std::size_t>(4 * r)];
            a[idx[r]] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    });
}

void apply_cnot(State& psi, int control, int target) noexcept {
    auto* a = psi.amplitudes().data();
    const int n = psi.n_qubits();
    const std::size_t mc = qubit_mask(n, control);
    const std::size_t mt = qubit_mask(n, target);
    for_each_pair_base(psi.dim(), std::min(mc, mt), std::max(mc, mt),
                       [&](std::size_t i) { std::swap(a[i | mc], a[i | mc | mt]); });
}

void apply_pauli(State& psi, int qubit, Pauli p) noexcept {
    auto* a = psi.amplitudes().data();
    const std::size_t dim = psi.dim();
    const std::size_t stride = qubit_mask(psi.n_qubits(), qubit);
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) {
            const cplx a0 = a[j];
            const cplx a1 = a[j + stride];
            switch (p) {
            case Pauli::X: a[j] = a1; a[j + stride] = a0; break;
            case Pauli::Y: a[j] = -kI * a1; a[j + stride] = kI * a0; break;
            case Pauli::Z: a[j + stride] = -a1; break;
            }
        }
    }
}

void apply_rotation(State& psi, int qubit, Pauli axis, double theta) noexcept {
    auto* a = psi.amplitudes().data();
    const std::size_t dim = psi.dim();
    const std::size_t stride = qubit_mask(psi.n_qubits(), qubit);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    switch (axis) {
    case Pauli::X:
        for (std::size_t base = 0; base < dim; base += 2 * stride) {
            for (std::size_t j = base; j < base + stride; ++j) {
                const cplx a0 = a[j];
                const cplx a1 = a[j + stride];
                // -i s a = s (a.imag, -a.real)
                a[j] = c * a0 + s * cplx(a1.imag(), -a1.real());
                a[j + stride] = c * a1 + s * cplx(a0.imag(), -a0.real());
            }
        }
        break;
    case Pauli::Y:
        for (std::size_t base = 0; base < dim; base += 2 * stride) {
            for (std::size_t j = base; j < base + stride; ++j) {
                const cplx a0 = a[j];
                const cplx a1 = a[j + stride];
                a[j] = c * a0 - s * a1;
                a[j + stride] = s * a0 + c * a1;
            }
        }
        break;
    case Pauli::Z: {
        const cplx e0(c, -s);
        const cplx e1(c, s);
        for (std::size_t base = 0; base < dim; base += 2 * stride) {
            for (std::size_t j = base; j < base + stride; ++j) {
                a[j] *= e0;
                a[j + stride] *= e1;
            }
        }
        break;
    }
    }
}

void apply_exchange(State& psi, int q0, int q1, double delta, double theta_xx, double theta_yy,
                    double theta_zz) noexcept {
    auto* a = psi.amplitudes().data();
    const int n = psi.n_qubits();
    const std::size_t m0 = qubit_mask(n, q0);
    const std::size_t m1 = qubit_mask(n, q1);
    const cplx ph1 = std::polar(1.0, -0.5 * delta * theta_zz);
    const cplx ph2 = std::polar(1.0, 0.5 * delta * theta_zz);
    const double a1 = 0.5 * (theta_xx - theta_yy);
    const double a2 = 0.5 * (theta_xx + theta_yy);
    const cplx c1 = ph1 * std::cos(a1);
    const cplx s1 = ph1 * (-kI * std::sin(a1));
    const cplx c2 = ph2 * std::cos(a2);
    const cplx s2 = ph2 * (-kI * std::sin(a2));
    for_each_pair_base(psi.dim(), std::min(m0, m1), std::max(m0, m1), [&](std::size_t i) {
        const std::size_t i01 = i | m1;
        const std::size_t i10 = i | m0;
        const std::size_t i11 = i | m0 | m1;
        const cplx v00 = a[i];
        const cplx v11 = a[i11];
        a[i] = c1 * v00 + s1 * v11;
        a[i11] = s1 * v00 + c1 * v11;
        const cplx v01 = a[i01];
        const cplx v10 = a[i10];
        a[i01] = c2 * v01 + s2 * v10;
        a[i10] = s2 * v01 + c2 * v10;
    });
}

void apply_exchange_generator(State& psi, int q0, int q1, double delta) noexcept {
    auto* a = psi.amplitudes().data();
    const int n = psi.n_qubits();
    const std::size_t m0 = qubit_mask(n, q0);
    const std::size_t m1 = qubit_mask(n, q1);
    for_each_pair_base(psi.dim(), std::min(m0, m1), std::max(m0, m1), [&](std::size_t i) {
        const std::size_t i01 = i | m1;
        const std::size_t i10 = i | m0;
        const std::size_t i11 = i | m0 | m1;
        a[i] *= delta;
        a[i11] *= delta;
        const cplx v01 = a[i01];
        const cplx v10 = a[i10];
        a[i01] = -delta * v01 + 2.0 * v10;
        a[i10] = -delta * v10 + 2.0 * v01;
    });
}

// ---------------------------------------------------------------------------
// Gates

GateSpec GateSpec::rotation(int qubit, Pauli axis, std::optional<std::size_t> slot) {
    GateSpec g;
    g.kind = GateKind::Rotation;
    g.targets = {qubit, qubit};
    g.axis = axis;
    g.parameter_slot = slot;
    return g;
}

GateSpec GateSpec::cnot(int control, int target) {
    GateSpec g;
    g.kind = GateKind::Cnot;
    g.targets = {control, target};
    return g;
}

GateSpec GateSpec::fixed_2q(int q0, int q1, const Mat4& unitary) {
    GateSpec g;
    g.kind = GateKind::Fixed2q;
    g.targets = {q0, q1};
    g.fixed = unitary;
    return g;
}

GateSpec GateSpec::exchange(int q0, int q1, double delta, std::optional<std::size_t> slot) {
    GateSpec g;
    g.kind = GateKind::Exchange;
    g.targets = {q0, q1};
    g.delta = delta;
    g.parameter_slot = slot;
    return g;
}

void apply_gate_inplace(State& psi, const GateSpec& gate, std::optional<double> theta) {
    if (gate.parameterized() != theta.has_value()) {
        throw ContractError(gate.parameterized() ? "rotation gate requires an angle"
                                                 : "angle supplied to an unparameterized gate");
    }
    check_qubit(psi, gate.targets[0]);
    if (gate.kind != GateKind::Rotation) {
        check_qubit(psi, gate.targets[1]);
        if (gate.targets[0] == gate.targets[1]) throw ContractError("two-qubit gate on a single qubit");
    }
    switch (gate.kind) {
    case GateKind::Rotation: apply_rotation(psi, gate.targets[0], gate.axis, *theta); break;
    case GateKind::Cnot: apply_cnot(psi, gate.targets[0], gate.targets[1]); break;
    case GateKind::Fixed2q: apply_2q(psi, gate.targets[0], gate.targets[1], gate.fixed); break;
    case GateKind::Exchange:
        apply_exchange(psi, gate.targets[0], gate.targets[1], gate.delta, *theta, *theta, *theta);
        break;
    }
}

State apply_gate(State psi, const GateSpec& gate, std::optional<double> theta) {
    apply_gate_inplace(psi, gate, theta);
    return psi;
}

// ---------------------------------------------------------------------------
// Measurement

double branch_probability(const State& psi, int qubit, int outcome) {
    check_qubit(psi, qubit);
    const auto* a = psi.amplitudes().data();
    const std::size_t dim = psi.dim();
    const std::size_t stride = qubit_mask(psi.n_qubits(), qubit);
    const std::size_t offset = outcome ? stride : 0;
    double p = 0.0;
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) p += std::norm(a[j + offset]);
    }
    return p;
}

void project_inplace(State& psi, int qubit, int outcome) noexcept {
    auto* a = psi.amplitudes().data();
    const std::size_t dim = psi.dim();
    const std::size_t stride = qubit_mask(psi.n_qubits(), qubit);
    const std::size_t offset = outcome ? 0 : stride;
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) a[j + offset] = 0.0;
    }
}

Projection project(const State& psi, int qubit, int outcome) {
    if (outcome != 0 && outcome != 1) throw ContractError("measurement outcome must be 0 or 1");
    const double p = branch_probability(psi, qubit, outcome);
    State out = psi;
    project_inplace(out, qubit, outcome);
    return {std::move(out), p};
}

std::pair<int, double> measure_qubit_inplace(State& psi, int qubit, Rng& rng) {
    const double p0 = branch_probability(psi, qubit, 0);
    const double p1 = branch_probability(psi, qubit, 1);
    if (p0 < 1e-15 && p1 < 1e-15) {
        throw CorruptedStateError("both measurement branches vanish on qubit " + std::to_string(qubit));
    }
    const int outcome = uniform01(rng) < p0 / (p0 + p1) ? 0 : 1;
    const double p = outcome == 0 ? p0 : p1;
    project_inplace(psi, qubit, outcome);
    psi.scale(1.0 / std::sqrt(p));
    return {outcome, p};
}

Measurement measure_qubit(const State& psi, int qubit, Rng& rng) {
    State out = psi;
    const auto [outcome, p] = measure_qubit_inplace(out, qubit, rng);
    return {outcome, std::move(out), p};
}

// ---------------------------------------------------------------------------
// Entanglement

DensityMatrix reduced_density(const State& psi, std::span<const int> subsystem) {
    const Bipartition bp(psi.n_qubits(), subsystem);
    const Eigen::MatrixXcd m = bp.reshape(psi);
    return m * m.adjoint();
}

double von_neumann_entropy(const DensityMatrix& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw ContractError("density matrix must be square");
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-8) {
        throw ContractError("density matrix trace " + std::to_string(tr) + " deviates from 1");
    }
    Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
    return entropy_from_spectrum(es.eigenvalues());
}

EntropyResult entanglement_entropy(const State& psi, std::span<const int> subsystem) {
    const Bipartition bp(psi.n_qubits(), subsystem);
    const Eigen::MatrixXcd m = bp.reshape(psi);
    // JacobiSVD: BDCSVD trips an internal index assertion on some degenerate spectra.
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const Eigen::VectorXd lambdas = svd.singularValues().array().square().matrix();
    EntropyResult r;
    r.subsystem.assign(subsystem.begin(), subsystem.end());
    r.entropy_bits = std::min(entropy_from_spectrum(lambdas), static_cast<double>(subsystem.size()));
    return r;
}

std::vector<int> half_chain(int n_qubits) {
    std::vector<int> a(static_cast<std::size_t>(n_qubits / 2));
    std::iota(a.begin(), a.end(), 0);
    return a;
}

} // namespace mvqc
