#include "mvqc/observable.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mvqc/errors.hpp"

namespace mvqc {

namespace {

using Bonds = std::vector<std::pair<std::size_t, std::size_t>>;

Bonds periodic_bonds(int n) {
    Bonds bonds;
    const int count = n == 2 ? 1 : n;
    for (int i = 0; i < count; ++i) bonds.push_back({qubit_mask(n, i), qubit_mask(n, (i + 1) % n)});
    return bonds;
}

// The XXZ and ZZ01 matrices are real in the computational basis; f(b, b', value)
// receives every nonzero O[b', b].
template <class F>
void for_each_entry(ObservableKind kind, int n, double delta, const Bonds& bonds, std::size_t b, F&& f) {
    if (kind == ObservableKind::ZZ01) {
        const bool odd = (((b & qubit_mask(n, 0)) != 0) != ((b & qubit_mask(n, 1)) != 0));
        f(b, odd ? -1.0 : 1.0);
        return;
    }
    double diag = 0.0;
    for (const auto& [mi, mj] : bonds) {
        const bool differ = ((b & mi) != 0) != ((b & mj) != 0);
        diag += differ ? -delta : delta;
        if (differ) f(b ^ mi ^ mj, 2.0);
    }
    f(b, diag);
}

// Lanczos with full reorthogonalization on the real symmetric matrix.
template <class MatVec>
double lanczos_min(std::size_t dim, MatVec&& matvec) {
    constexpr double kTol = 1e-10;
    const std::size_t max_krylov = std::min<std::size_t>(dim, 400);
    std::vector<Eigen::VectorXd> basis;
    std::vector<double> alpha, beta;

    Rng rng(0x5eed);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -1.0, 1.0);
    v.normalize();
    Eigen::VectorXd w(v.size());

    double last = 0.0;
    for (std::size_t k = 0; k < max_krylov; ++k) {
        basis.push_back(v);
        matvec(v, w);
        const double a = v.dot(w);
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : basis) w -= u.dot(w) * u;
        const double b = w.norm();
        const bool exhausted = b < 1e-13 || k + 1 == dim || k + 1 == max_krylov;
        if (!exhausted && k % 4 != 3) {
            beta.push_back(b);
            v = w / b;
            continue;
        }

        const auto m = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            t(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        last = es.eigenvalues()[0];
        const double residual = std::abs(b * es.eigenvectors()(m - 1, 0));
        if (residual < kTol * std::max(1.0, std::abs(last)) || b < 1e-13 || k + 1 == dim) return last;
        if (k + 1 == max_krylov) break;
        beta.push_back(b);
        v = w / b;
    }
    throw NumericalError("Lanczos did not converge within " + std::to_string(max_krylov) + " vectors");
}

} // namespace

struct Observable::GroundCache {
    std::once_flag once;
    double value = 0.0;
    std::exception_ptr error;
};

Observable::Observable(ObservableKind kind, int n, double delta)
    : kind_(kind), n_(n), delta_(delta), bonds_(periodic_bonds(n)), ground_(std::make_shared<GroundCache>()) {}

Observable Observable::zz01(int n_qubits) {
    if (n_qubits < 2 || n_qubits > kMaxQubits) throw SizeError("ZZ01 needs 2..24 qubits");
    return Observable(ObservableKind::ZZ01, n_qubits, 0.0);
}

Observable Observable::xxz(int n_qubits, double delta) {
    if (n_qubits < 2 || n_qubits > kMaxQubits) throw SizeError("XXZ needs 2..24 qubits");
    return Observable(ObservableKind::XXZ, n_qubits, delta);
}

std::string Observable::name() const {
    return kind_ == ObservableKind::ZZ01 ? "zz01" : "xxz";
}

void Observable::check_dim(const State& psi) const {
    if (psi.n_qubits() != n_) {
        throw ContractError("observable acts on " + std::to_string(n_) + " qubits, state has " +
                            std::to_string(psi.n_qubits()));
    }
}

void Observable::apply(const State& in, State& out) const {
    check_dim(in);
    if (out.n_qubits() != n_) out = State(n_);
    auto src = in.amplitudes();
    auto dst = out.amplitudes();
    std::fill(dst.begin(), dst.end(), cplx{});
    for (std::size_t b = 0; b < src.size(); ++b) {
        const cplx a = src[b];
        for_each_entry(kind_, n_, delta_, bonds_, b, [&](std::size_t to, double v) { dst[to] += v * a; });
    }
}

State Observable::apply(const State& in) const {
    State out(n_);
    apply(in, out);
    return out;
}

double Observable::quadratic_form(const State& psi) const {
    check_dim(psi);
    auto a = psi.amplitudes();
    double acc = 0.0;
    for (std::size_t b = 0; b < a.size(); ++b) {
        for_each_entry(kind_, n_, delta_, bonds_, b,
                       [&](std::size_t to, double v) { acc += v * (std::conj(a[to]) * a[b]).real(); });
    }
    return acc;
}

double Observable::exact_ground_energy() const {
    if (n_ > 14) throw SizeError("exact ground energy supported up to 14 qubits");
    std::call_once(ground_->once, [this] {
        try {
            const std::size_t dim = std::size_t{1} << n_;
            ground_->value = lanczos_min(dim, [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
                y.setZero();
                for (std::size_t b = 0; b < static_cast<std::size_t>(x.size()); ++b) {
                    const double xb = x[static_cast<Eigen::Index>(b)];
                    for_each_entry(kind_, n_, delta_, bonds_, b,
                                   [&](std::size_t to, double v) { y[static_cast<Eigen::Index>(to)] += v * xb; });
                }
            });
        } catch (...) {
            ground_->error = std::current_exception();
        }
    });
    if (ground_->error) std::rethrow_exception(ground_->error);
    return ground_->value;
}

double Observable::plus_weight(const State& psi) const {
    if (!two_outcome()) throw UnsupportedError("observable " + name() + " has no two-outcome projector pair");
    check_dim(psi);
    const std::size_t m0 = qubit_mask(n_, 0);
    const std::size_t m1 = qubit_mask(n_, 1);
    double w = 0.0;
    auto a = psi.amplitudes();
    for (std::size_t b = 0; b < a.size(); ++b) {
        if (((b & m0) != 0) == ((b & m1) != 0)) w += std::norm(a[b]);
    }
    return w;
}

double expectation(const State& psi, const Observable& obs) { return obs.quadratic_form(psi); }

} // namespace mvqc
