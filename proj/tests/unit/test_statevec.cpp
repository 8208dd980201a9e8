#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mvqc/errors.hpp"
#include "mvqc/statevec.hpp"
#include "oracles.hpp"

using namespace mvqc;
using oracle::cplx;

namespace {

constexpr double kPi = std::numbers::pi;

State bell() {
    State s(2);
    apply_gate_inplace(s, GateSpec::rotation(0, Pauli::Y), kPi / 2);
    apply_gate_inplace(s, GateSpec::cnot(0, 1), std::nullopt);
    return s;
}

State ghz3() {
    State s(3);
    apply_rotation(s, 0, Pauli::Y, kPi / 2);
    apply_cnot(s, 0, 1);
    apply_cnot(s, 1, 2);
    return s;
}

// Random gate sequence over every kernel; returns the dense unitary it applies.
oracle::MatrixXcd random_circuit(State& s, std::mt19937_64& rng, int n_gates) {
    const int n = s.n_qubits();
    std::uniform_int_distribution<int> kind(0, 3), qubit(0, n - 1);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    oracle::MatrixXcd u = oracle::MatrixXcd::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (int g = 0; g < n_gates; ++g) {
        const int a = qubit(rng);
        int b = qubit(rng);
        while (n > 1 && b == a) b = qubit(rng);
        const Pauli ax = static_cast<Pauli>(kind(rng) % 3);
        const double t = angle(rng);
        switch (kind(rng)) {
        case 0:
            apply_rotation(s, a, ax, t);
            u = oracle::embed_1q(n, a, oracle::expm_half(oracle::pauli(to_char(ax)), t)) * u;
            break;
        case 1:
            if (n < 2) break;
            apply_cnot(s, a, b);
            u = oracle::cnot(n, a, b) * u;
            break;
        default: {
            if (n < 2) break;
            const double d = angle(rng);
            apply_exchange(s, a, b, d, t, t, t);
            std::string xx(static_cast<std::size_t>(n), 'I'), yy = xx, zz = xx;
            xx[static_cast<std::size_t>(a)] = xx[static_cast<std::size_t>(b)] = 'X';
            yy[static_cast<std::size_t>(a)] = yy[static_cast<std::size_t>(b)] = 'Y';
            zz[static_cast<std::size_t>(a)] = zz[static_cast<std::size_t>(b)] = 'Z';
            const oracle::MatrixXcd gen =
                oracle::pauli_string(xx) + oracle::pauli_string(yy) + d * oracle::pauli_string(zz);
            u = oracle::expm_half(gen, t) * u;
        }
        }
    }
    return u;
}

} // namespace

TEST_CASE("new_zero_state prepares |0...0> and enforces the qubit range") {
    const State s1 = new_zero_state(1);
    CHECK(s1.dim() == 2);
    CHECK(s1[0] == cplx{1.0, 0.0});
    CHECK(s1[1] == cplx{0.0, 0.0});
    const State s2 = new_zero_state(2);
    CHECK(s2.dim() == 4);
    CHECK(s2[0] == cplx{1.0, 0.0});
    for (std::size_t i = 1; i < 4; ++i) CHECK(s2[i] == cplx{0.0, 0.0});
    CHECK_THROWS_AS((void)new_zero_state(25), SizeError);
    CHECK_THROWS_AS((void)new_zero_state(0), SizeError);
}

TEST_CASE("gate examples") {
    SUBCASE("R_X(pi)|0> = -i|1>") {
        const State s = apply_gate(State(1), GateSpec::rotation(0, Pauli::X), kPi);
        CHECK(std::abs(s[0]) < 1e-15);
        CHECK(std::abs(s[1] - cplx{0.0, -1.0}) < 1e-15);
    }
    SUBCASE("R_Z(theta)|0> picks up e^{-i theta/2} only") {
        const double t = 0.731;
        const State s = apply_gate(State(1), GateSpec::rotation(0, Pauli::Z), t);
        CHECK(std::abs(s[0] - std::polar(1.0, -t / 2)) < 1e-15);
        CHECK(std::norm(s[1]) == 0.0);
    }
    SUBCASE("CNOT on |+>|0> gives a Bell pair") {
        const State s = bell();
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(s[0] - r) < 1e-15);
        CHECK(std::abs(s[3] - r) < 1e-15);
        CHECK(std::abs(s[1]) < 1e-15);
        CHECK(std::abs(s[2]) < 1e-15);
    }
    SUBCASE("theta must be supplied iff the gate is parameterized") {
        State s(2);
        CHECK_THROWS_AS(apply_gate_inplace(s, GateSpec::rotation(0, Pauli::X), std::nullopt), ContractError);
        CHECK_THROWS_AS(apply_gate_inplace(s, GateSpec::cnot(0, 1), 0.3), ContractError);
        CHECK_THROWS_AS(apply_gate_inplace(s, GateSpec::rotation(2, Pauli::X), 0.3), ContractError);
    }
}

TEST_CASE("kernels match dense Kronecker constructions (qubit 0 most significant)") {
    std::mt19937_64 rng(11);
    for (int n = 1; n <= 4; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            State s = oracle::random_state(n, rng);
            const auto v0 = oracle::to_vec(s);
            const auto u = random_circuit(s, rng, 12);
            CHECK(oracle::max_abs_diff(oracle::to_vec(s), u * v0) < 1e-12);
        }
    }
}

TEST_CASE("matrix helpers agree with matrix exponentials") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int rep = 0; rep < 20; ++rep) {
        const double t = angle(rng);
        for (char p : {'X', 'Y', 'Z'}) {
            const auto ref = oracle::expm_half(oracle::pauli(p), t);
            CHECK((oracle::mat2(rotation_matrix(pauli_from_char(p), t)) - ref).norm() < 1e-13);
        }
        const double d = angle(rng);
        const oracle::MatrixXcd gen = oracle::pauli_string("XX") + oracle::pauli_string("YY") + d * oracle::pauli_string("ZZ");
        CHECK((oracle::mat4(exchange_generator(d)) - gen).norm() < 1e-13);
        CHECK((oracle::mat4(exchange_matrix(d, t, t, t)) - oracle::expm_half(gen, t)).norm() < 1e-12);
    }
    const auto s = oracle::mat4(singlet_preparation());
    CHECK((s.adjoint() * s - oracle::MatrixXcd::Identity(4, 4)).norm() < 1e-14);
    CHECK(std::abs(s(1, 0) - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s(2, 0) + 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("unitarity over 100 random circuits") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        State s(1 + rep % 6);
        random_circuit(s, rng, 40);
        CHECK(std::abs(s.norm_squared() - 1.0) <= 1e-10);
    }
}

TEST_CASE("project examples") {
    State plus(1);
    apply_rotation(plus, 0, Pauli::Y, kPi / 2);
    CHECK(project(plus, 0, 0).probability == doctest::Approx(0.5).epsilon(1e-14));

    State one(1);
    apply_rotation(one, 0, Pauli::X, kPi);
    const Projection p1 = project(one, 0, 0);
    CHECK(p1.probability < 1e-30);
    CHECK(p1.state.norm_squared() < 1e-30);

    const Projection pb = project(bell(), 0, 1);
    CHECK(pb.probability == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(pb.state[3] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(pb.state[0]) < 1e-15);
}

TEST_CASE("branch completeness") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + rep % 5;
        const State s = oracle::random_state(n, rng);
        for (int q = 0; q < n; ++q)
            CHECK(std::abs(project(s, q, 0).probability + project(s, q, 1).probability - 1.0) <= 1e-12);
    }
}

TEST_CASE("measure_qubit examples") {
    Rng rng(1);
    const Measurement m0 = measure_qubit(State(1), 0, rng);
    CHECK(m0.outcome == 0);
    CHECK(m0.probability == 1.0);

    State plus(1);
    apply_rotation(plus, 0, Pauli::Y, kPi / 2);
    int zeros = 0;
    for (int i = 0; i < 10000; ++i) zeros += measure_qubit(plus, 0, rng).outcome == 0;
    CHECK(std::abs(zeros / 10000.0 - 0.5) <= 0.02);

    for (int i = 0; i < 200; ++i) {
        State s = bell();
        const int a = measure_qubit_inplace(s, 0, rng).first;
        const int b = measure_qubit_inplace(s, 1, rng).first;
        CHECK(a == b);
        CHECK(std::abs(s.norm_squared() - 1.0) < 1e-12);
    }

    const State dead = State::from_amplitudes({0.0, 0.0});
    CHECK_THROWS_AS((void)measure_qubit(dead, 0, rng), CorruptedStateError);
}

TEST_CASE("reduced_density examples") {
    SUBCASE("product state is rank one") {
        State s(3);
        apply_rotation(s, 0, Pauli::Y, 0.4);
        apply_rotation(s, 1, Pauli::X, 1.1);
        apply_rotation(s, 2, Pauli::Y, -0.7);
        const std::vector<int> a{0, 1};
        const auto rho = reduced_density(s, a);
        Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho);
        CHECK(es.eigenvalues()(3) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(es.eigenvalues()(2)) < 1e-12);
    }
    SUBCASE("Bell pair: one qubit is maximally mixed") {
        const std::vector<int> a{1};
        const auto rho = reduced_density(bell(), a);
        CHECK((rho - 0.5 * DensityMatrix::Identity(2, 2)).norm() < 1e-14);
    }
    SUBCASE("GHZ(3): two qubits give diag(1/2, 0, 0, 1/2)") {
        const std::vector<int> a{0, 1};
        const auto rho = reduced_density(ghz3(), a);
        DensityMatrix ref = DensityMatrix::Zero(4, 4);
        ref(0, 0) = ref(3, 3) = 0.5;
        CHECK((rho - ref).norm() < 1e-14);
    }
    SUBCASE("empty or full subsystem is rejected") {
        const std::vector<int> none;
        const std::vector<int> all{0, 1};
        CHECK_THROWS_AS((void)reduced_density(bell(), none), ContractError);
        CHECK_THROWS_AS((void)reduced_density(bell(), all), ContractError);
    }
    SUBCASE("Hermitian, unit trace, PSD on random states") {
        std::mt19937_64 rng(8);
        const State s = oracle::random_state(5, rng);
        const std::vector<int> a{4, 1};
        const auto rho = reduced_density(s, a);
        CHECK((rho - rho.adjoint()).norm() < 1e-12);
        CHECK(std::abs(rho.trace() - cplx{1.0, 0.0}) < 1e-12);
        Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("reduced_density matches the dense partial trace") {
    std::mt19937_64 rng(9);
    const int n = 4;
    const State s = oracle::random_state(n, rng);
    const auto v = oracle::to_vec(s);
    const std::vector<int> a{2, 0}; // order defines the row index
    const auto rho = reduced_density(s, a);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            cplx acc{0.0, 0.0};
            for (int e = 0; e < 4; ++e) { // complement qubits 1, 3
                auto index = [&](int sub) {
                    const int q2 = (sub >> 1) & 1, q0 = sub & 1, q1 = (e >> 1) & 1, q3 = e & 1;
                    return (q0 << 3) | (q1 << 2) | (q2 << 1) | q3;
                };
                acc += v(index(r)) * std::conj(v(index(c)));
            }
            CHECK(std::abs(rho(r, c) - acc) < 1e-13);
        }
    }
}

TEST_CASE("von_neumann_entropy examples") {
    CHECK(von_neumann_entropy(0.5 * DensityMatrix::Identity(2, 2)) == doctest::Approx(1.0).epsilon(1e-14));
    DensityMatrix pure = DensityMatrix::Zero(2, 2);
    pure(0, 0) = 0.5;
    pure(0, 1) = 0.5;
    pure(1, 0) = 0.5;
    pure(1, 1) = 0.5;
    CHECK(std::abs(von_neumann_entropy(pure)) < 1e-12);
    CHECK(von_neumann_entropy(0.25 * DensityMatrix::Identity(4, 4)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)von_neumann_entropy(0.3 * DensityMatrix::Identity(2, 2)), ContractError);
}

TEST_CASE("Schmidt entropy agrees with the density-matrix route and is symmetric") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + rep % 7;
        const State s = oracle::random_state(n, rng);
        std::vector<int> a, b;
        std::bernoulli_distribution coin(0.5);
        for (int q = 0; q < n; ++q) (coin(rng) ? a : b).push_back(q);
        if (a.empty()) a.push_back(b.back()), b.pop_back();
        if (b.empty()) b.push_back(a.back()), a.pop_back();
        const double sa = entanglement_entropy(s, a).entropy_bits;
        CHECK(std::abs(sa - entanglement_entropy(s, b).entropy_bits) <= 1e-8);
        CHECK(std::abs(sa - von_neumann_entropy(reduced_density(s, a))) <= 1e-8);
        CHECK(sa >= 0.0);
        CHECK(sa <= static_cast<double>(std::min(a.size(), b.size())) + 1e-12);
    }
    const std::vector<int> half{0};
    CHECK(entanglement_entropy(bell(), half).entropy_bits == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(half_chain(6) == std::vector<int>{0, 1, 2});
}

TEST_CASE("project then normalize equals P_M U |0> / sqrt(p_M) built densely") {
    std::mt19937_64 rng(31);
    for (int n = 1; n <= 4; ++n) {
        State s(n);
        oracle::MatrixXcd op = random_circuit(s, rng, 10);
        std::vector<std::pair<int, int>> proj;
        for (int k = 0; k < 3; ++k) {
            const int q = static_cast<int>(rng() % static_cast<unsigned>(n));
            const int out = project(s, q, 0).probability >= 0.5 ? 0 : 1; // the likelier branch
            Projection pr = project(s, q, out);
            s = std::move(pr.state);
            s.normalize();
            op = oracle::projector(n, q, out) * op;
            op = random_circuit(s, rng, 5) * op;
        }
        oracle::VectorXcd ref = op * oracle::zero_vec(n);
        ref /= ref.norm();
        CHECK(oracle::max_abs_diff(oracle::to_vec(s), ref) < 1e-12);
    }
}
