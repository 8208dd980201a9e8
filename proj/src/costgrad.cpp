#include "mvqc/costgrad.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mvqc/errors.hpp"
#include "mvqc/stats.hpp"

namespace mvqc {

namespace {

void check_theta(const CircuitRealization& r, std::span<const double> theta) {
    if (theta.size() != r.parameter_count()) {
        throw ContractError("theta has " + std::to_string(theta.size()) + " entries, circuit expects " +
                            std::to_string(r.parameter_count()));
    }
}

void check_obs(const CircuitRealization& r, const Observable& obs) {
    if (obs.n_qubits() != r.n_qubits()) throw ContractError("observable and circuit qubit counts differ");
}

struct Tape {
    State state;                               // final, normalized
    std::vector<std::optional<State>> before;  // per segment: normalized state in front of its wall
    std::vector<double> wall_probability;      // per segment: product of the wall's conditional probabilities
    OutcomeRecord record;
};

// Forced mode when `rng` is null. Conditional probabilities below `dead`
// raise DeadBranchError.
Tape forward(const Program& prog, std::span<const double> theta, const OutcomeRecord* forced, Rng* rng,
             const Shift* shift, double dead) {
    Tape t{State(prog.n_qubits), {}, {}, {}};
    t.before.resize(prog.segments.size());
    t.wall_probability.assign(prog.segments.size(), 1.0);
    if (forced) t.record.outcomes = forced->outcomes;
    for (std::size_t s = 0; s < prog.segments.size(); ++s) {
        const auto& seg = prog.segments[s];
        for (const auto& op : seg.gates) apply_op(t.state, op, prog, theta, shift);
        if (seg.wall_qubits.empty()) continue;
        t.before[s] = t.state;
        for (std::size_t k = 0; k < seg.wall_qubits.size(); ++k) {
            const int q = seg.wall_qubits[k];
            double p = 0.0;
            if (rng) {
                const auto [bit, prob] = measure_qubit_inplace(t.state, q, *rng);
                t.record.outcomes.push_back(static_cast<std::uint8_t>(bit));
                p = prob;
            } else {
                const std::size_t site = seg.first_site + k;
                const int bit = forced->outcomes[site];
                p = branch_probability(t.state, q, bit);
                if (p < dead || p <= 0.0) throw DeadBranchError(site, p);
                project_inplace(t.state, q, bit);
                t.state.scale(1.0 / std::sqrt(p));
            }
            t.wall_probability[s] *= p;
            t.record.branch_probabilities.push_back(p);
            t.record.joint_probability *= p;
            t.record.log_probability += std::log(p);
        }
    }
    return t;
}

Tape forward_forced(const CircuitRealization& r, std::span<const double> theta, const OutcomeRecord& record,
                    const Shift* shift = nullptr, double dead = kDeadBranchEpsilon) {
    if (record.outcomes.size() != r.program().site_count) {
        throw ContractError("outcome record has " + std::to_string(record.outcomes.size()) +
                            " entries, realization has " + std::to_string(r.program().site_count) + " sites");
    }
    return forward(r.program(), theta, &record, nullptr, shift, dead);
}

// Accumulates Im<phi|A chi> at every parameterized gate while unwinding the
// program. `phi` is the cotangent at the circuit output.
void backward(const Program& prog, std::span<const double> theta, const Tape& tape, State phi, Gradient& grad,
              double weight) {
    State chi = tape.state;
    State scratch(prog.n_qubits);
    for (std::size_t s = prog.segments.size(); s-- > 0;) {
        const auto& seg = prog.segments[s];
        if (!seg.wall_qubits.empty()) {
            chi = *tape.before[s];
            for (std::size_t k = 0; k < seg.wall_qubits.size(); ++k)
                project_inplace(phi, seg.wall_qubits[k], tape.record.outcomes[seg.first_site + k]);
            phi.scale(1.0 / std::sqrt(tape.wall_probability[s]));
        }
        for (std::size_t g = seg.gates.size(); g-- > 0;) {
            const Op& op = seg.gates[g];
            if (op.slot >= 0) {
                std::copy(chi.amplitudes().begin(), chi.amplitudes().end(), scratch.amplitudes().begin());
                apply_op_generator(scratch, op);
                grad[static_cast<std::size_t>(op.slot)] += weight * phi.inner(scratch).imag();
            }
            apply_op_adjoint(chi, op, prog, theta);
            apply_op_adjoint(phi, op, prog, theta);
        }
    }
}

// phi = (O - c) chi
State shifted_action(const Observable& obs, const State& chi, double c) {
    State phi = obs.apply(chi);
    auto p = phi.amplitudes();
    auto x = chi.amplitudes();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= c * x[i];
    return phi;
}

// Depth-first walk over outcome branches with unnormalized states. Calls
// leaf(state, outcomes) for every branch above kNegligibleBranch.
template <class Leaf>
class BranchWalker {
  public:
    BranchWalker(const Program& prog, std::span<const double> theta, const Shift* shift, Leaf& leaf)
        : prog_(prog), theta_(theta), shift_(shift), leaf_(leaf) {}

    void run() {
        if (prog_.site_count > kMaxEnumeratedSites) {
            throw CapacityError(std::to_string(prog_.site_count) + " measurement sites exceed the enumeration cap of " +
                                std::to_string(kMaxEnumeratedSites) + "; use the sampled estimator");
        }
        spare_.assign(prog_.site_count, State(prog_.n_qubits));
        State psi(prog_.n_qubits);
        enter(0, psi);
    }

  private:
    void enter(std::size_t s, State& psi) {
        for (const auto& op : prog_.segments[s].gates) apply_op(psi, op, prog_, theta_, shift_);
        wall(s, 0, psi);
    }

    // spare_[d] holds the outcome-1 branch while the outcome-0 subtree at
    // depth d (= sites resolved so far) runs; deeper levels never touch it.
    void wall(std::size_t s, std::size_t k, State& psi) {
        const auto& seg = prog_.segments[s];
        if (k == seg.wall_qubits.size()) {
            if (s + 1 == prog_.segments.size()) {
                leaf_(psi, bits_);
            } else {
                enter(s + 1, psi);
            }
            return;
        }
        const int q = seg.wall_qubits[k];
        State& one = spare_[bits_.size()];
        std::copy(psi.amplitudes().begin(), psi.amplitudes().end(), one.amplitudes().begin());
        project_inplace(psi, q, 0);
        project_inplace(one, q, 1);
        if (psi.norm_squared() >= kNegligibleBranch) {
            bits_.push_back(0);
            wall(s, k + 1, psi);
            bits_.pop_back();
        }
        if (one.norm_squared() >= kNegligibleBranch) {
            bits_.push_back(1);
            wall(s, k + 1, one);
            bits_.pop_back();
        }
    }

    const Program& prog_;
    std::span<const double> theta_;
    const Shift* shift_;
    Leaf& leaf_;
    std::vector<std::uint8_t> bits_;
    std::vector<State> spare_;
};

template <class Leaf>
void walk_branches(const Program& prog, std::span<const double> theta, const Shift* shift, Leaf&& leaf) {
    BranchWalker<std::remove_reference_t<Leaf>> w(prog, theta, shift, leaf);
    w.run();
}

double mixed_value(const CircuitRealization& r, std::span<const double> theta, const Observable& obs,
                   const Shift* shift) {
    double total = 0.0;
    walk_branches(r.program(), theta, shift,
                  [&](const State& psi, const std::vector<std::uint8_t>&) { total += obs.quadratic_form(psi); });
    return total;
}

std::string describe(const Shift& s) {
    return "parameter shift of op " + std::to_string(s.op_id) + " factor " + std::to_string(s.factor) + " by " +
           std::to_string(s.amount);
}

// Calls f(op, factor) for every shiftable factor of every parameterized op.
template <class F>
void for_each_shift(const Program& prog, F&& f) {
    for (const auto& seg : prog.segments)
        for (const auto& op : seg.gates)
            if (op.slot >= 0)
                for (const auto& fac : shift_factors(op)) f(op, fac);
}

} // namespace

CostValue projective_cost(const CircuitRealization& r, std::span<const double> theta, const OutcomeRecord& record,
                          const Observable& obs) {
    check_theta(r, theta);
    check_obs(r, obs);
    Tape t = forward_forced(r, theta, record);
    return CostValue{obs.quadratic_form(t.state), CostVariant::Projective, std::move(t.record), std::nullopt};
}

CostValue mixed_cost_exact(const CircuitRealization& r, std::span<const double> theta, const Observable& obs) {
    check_theta(r, theta);
    check_obs(r, obs);
    return CostValue{mixed_value(r, theta, obs, nullptr), CostVariant::Mixed, std::nullopt, std::nullopt};
}

CostValue mixed_cost_sampled(const CircuitRealization& r, std::span<const double> theta, const Observable& obs,
                             int n_samples, Rng& rng) {
    check_theta(r, theta);
    check_obs(r, obs);
    if (n_samples < 1) throw ContractError("mixed_cost_sampled needs at least one sample");
    std::vector<double> values(static_cast<std::size_t>(n_samples));
    for (auto& v : values) v = obs.quadratic_form(run(r, theta, rng).state);
    CostValue out{mean(values), CostVariant::Mixed, std::nullopt, std::nullopt};
    if (n_samples > 1) out.std_error = bootstrap_stderr(values, 200, rng());
    return out;
}

CostAndGradient projective_cost_and_grad(const CircuitRealization& r, std::span<const double> theta,
                                         const OutcomeRecord& record, const Observable& obs) {
    check_theta(r, theta);
    check_obs(r, obs);
    Tape t = forward_forced(r, theta, record);
    CostAndGradient out;
    out.cost = obs.quadratic_form(t.state);
    out.gradient.assign(r.parameter_count(), 0.0);
    backward(r.program(), theta, t, shifted_action(obs, t.state, out.cost), out.gradient, 1.0);
    out.record = std::move(t.record);
    return out;
}

CostAndGradient sample_projective_grad(const CircuitRealization& r, std::span<const double> theta,
                                       const Observable& obs, Rng& rng) {
    check_theta(r, theta);
    check_obs(r, obs);
    Tape t = forward(r.program(), theta, nullptr, &rng, nullptr, 0.0);
    CostAndGradient out;
    out.cost = obs.quadratic_form(t.state);
    out.gradient.assign(r.parameter_count(), 0.0);
    backward(r.program(), theta, t, shifted_action(obs, t.state, out.cost), out.gradient, 1.0);
    out.record = std::move(t.record);
    return out;
}

Gradient projective_grad_analytic(const CircuitRealization& r, std::span<const double> theta,
                                  const OutcomeRecord& record, const Observable& obs) {
    return projective_cost_and_grad(r, theta, record, obs).gradient;
}

Gradient projective_grad_paramshift(const CircuitRealization& r, std::span<const double> theta,
                                    const OutcomeRecord& record, const Observable& obs) {
    check_theta(r, theta);
    check_obs(r, obs);
    const Tape base = forward_forced(r, theta, record);
    const double c = obs.quadratic_form(base.state);
    const double log_p = base.record.log_probability;

    Gradient grad(r.parameter_count(), 0.0);
    for_each_shift(r.program(), [&](const Op& op, const ShiftFactor& fac) {
        const double amount = std::numbers::pi / (2.0 * fac.coefficient);
        double term[2];
        for (int sign = 0; sign < 2; ++sign) {
            const Shift shift{op.id, fac.factor, sign == 0 ? amount : -amount};
            try {
                const Tape t = forward_forced(r, theta, record, &shift);
                // p_M^pm / p_M times (<O>^pm - C)
                term[sign] = std::exp(t.record.log_probability - log_p) * (obs.quadratic_form(t.state) - c);
            } catch (const DeadBranchError& e) {
                throw DeadBranchError(e.site(), e.branch_probability(), describe(shift));
            }
        }
        grad[static_cast<std::size_t>(op.slot)] += 0.5 * fac.coefficient * (term[0] - term[1]);
    });
    return grad;
}

Gradient mixed_grad(const CircuitRealization& r, std::span<const double> theta, const Observable& obs,
                    MixedGradMode mode) {
    check_theta(r, theta);
    check_obs(r, obs);
    Gradient grad(r.parameter_count(), 0.0);
    if (mode == MixedGradMode::Exact) {
        std::vector<OutcomeRecord> leaves;
        walk_branches(r.program(), theta, nullptr, [&](const State&, const std::vector<std::uint8_t>& bits) {
            leaves.push_back(make_record(bits));
        });
        for (const auto& rec : leaves) {
            const Tape t = forward_forced(r, theta, rec, nullptr, 0.0);
            backward(r.program(), theta, t, obs.apply(t.state), grad, t.record.joint_probability);
        }
        return grad;
    }
    if (r.program().site_count > kMaxEnumeratedSites) {
        throw CapacityError("too many measurement sites for exact mixed gradients");
    }
    for_each_shift(r.program(), [&](const Op& op, const ShiftFactor& fac) {
        const double amount = std::numbers::pi / (2.0 * fac.coefficient);
        const Shift plus{op.id, fac.factor, amount};
        const Shift minus{op.id, fac.factor, -amount};
        grad[static_cast<std::size_t>(op.slot)] +=
            0.5 * fac.coefficient * (mixed_value(r, theta, obs, &plus) - mixed_value(r, theta, obs, &minus));
    });
    return grad;
}

Gradient mixed_grad_sampled(const CircuitRealization& r, std::span<const double> theta, const Observable& obs,
                            int n_samples, Rng& rng) {
    check_theta(r, theta);
    check_obs(r, obs);
    if (n_samples < 1) throw ContractError("mixed_grad_sampled needs at least one sample");
    Gradient grad(r.parameter_count(), 0.0);
    const double w = 1.0 / n_samples;
    for (int i = 0; i < n_samples; ++i) {
        const Tape t = forward(r.program(), theta, nullptr, &rng, nullptr, 0.0);
        backward(r.program(), theta, t, obs.apply(t.state), grad, w);
    }
    return grad;
}

Gradient finite_difference_grad(const CostFunction& f, std::span<const double> theta, double h) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw ContractError("finite-difference step must lie in [1e-7, 1e-3]");
    std::vector<double> x(theta.begin(), theta.end());
    Gradient g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k];
        x[k] = x0 + h;
        const double up = f(x);
        x[k] = x0 - h;
        const double down = f(x);
        x[k] = x0;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

} // namespace mvqc
