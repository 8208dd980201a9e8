#include "mvqc/ansatz.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "mvqc/errors.hpp"

namespace mvqc {

namespace {

void check_shape(int n_qubits, int n_layers) {
    if (n_qubits < 2 || n_qubits % 2 != 0) {
        throw ContractError("ansatz requires an even qubit count >= 2, got " + std::to_string(n_qubits));
    }
    if (n_qubits > kMaxQubits) throw SizeError("too many qubits for the statevector engine");
    if (n_layers < 1) throw ContractError("ansatz requires at least one layer");
}

// Periodic brickwork pairs: even (0,1),(2,3),...; odd (1,2),...,(n-1,0).
std::vector<std::pair<int, int>> even_pairs(int n) {
    std::vector<std::pair<int, int>> v;
    for (int i = 0; i + 1 < n; i += 2) v.emplace_back(i, i + 1);
    return v;
}

std::vector<std::pair<int, int>> odd_pairs(int n) {
    std::vector<std::pair<int, int>> v;
    for (int i = 1; i < n; i += 2) v.emplace_back(i, (i + 1) % n);
    return v;
}

Pauli random_axis(Rng& rng) {
    return static_cast<Pauli>(std::uniform_int_distribution<int>(0, 2)(rng));
}

// Fills parameter_count / sharing_map from the gates' slots.
void index_slots(CircuitTemplate& t) {
    std::size_t count = 0;
    auto visit = [&](int layer, const std::vector<GateSpec>& gates) {
        for (std::size_t i = 0; i < gates.size(); ++i) {
            if (!gates[i].parameter_slot) continue;
            const std::size_t s = *gates[i].parameter_slot;
            if (s >= t.sharing_map.size()) t.sharing_map.resize(s + 1);
            t.sharing_map[s].push_back(OpRef{layer, i});
            count = std::max(count, s + 1);
        }
    };
    t.sharing_map.clear();
    visit(-1, t.preamble);
    for (int l = 0; l < t.n_layers; ++l) visit(l, t.layers[static_cast<std::size_t>(l)]);
    t.parameter_count = count;
}

std::shared_ptr<const Program> compile(const CircuitTemplate& t, const std::vector<MeasSite>& sites) {
    auto prog = std::make_shared<Program>();
    prog->n_qubits = t.n_qubits;
    prog->parameter_count = t.parameter_count;
    prog->segments.resize(static_cast<std::size_t>(t.n_layers));
    std::size_t id = 0;
    auto lower = [&](const GateSpec& g, Segment& seg) {
        Op op;
        op.kind = g.kind;
        op.axis = g.axis;
        op.q0 = g.targets[0];
        op.q1 = g.targets[1];
        op.delta = g.delta;
        op.slot = g.parameter_slot ? static_cast<std::ptrdiff_t>(*g.parameter_slot) : -1;
        if (g.kind == GateKind::Fixed2q) {
            op.fixed = prog->fixed_gates.size();
            prog->fixed_gates.push_back(g.fixed);
        }
        op.id = id++;
        seg.gates.push_back(op);
    };
    for (const auto& g : t.preamble) lower(g, prog->segments.front());
    std::size_t site = 0;
    for (int l = 0; l < t.n_layers; ++l) {
        auto& seg = prog->segments[static_cast<std::size_t>(l)];
        for (const auto& g : t.layers[static_cast<std::size_t>(l)]) lower(g, seg);
        seg.first_site = site;
        for (const auto& s : sites) {
            if (s.layer == l) seg.wall_qubits.push_back(s.qubit);
        }
        site += seg.wall_qubits.size();
    }
    prog->op_count = id;
    prog->site_count = site;
    return prog;
}

double op_angle(const Op& op, std::span<const double> theta) {
    return theta[static_cast<std::size_t>(op.slot)];
}

} // namespace

std::string to_string(AnsatzKind kind) {
    switch (kind) {
    case AnsatzKind::HEA1: return "hea1";
    case AnsatzKind::HEA2: return "hea2";
    case AnsatzKind::XXZ_HVA: return "xxz_hva";
    }
    return "unknown";
}

AnsatzKind ansatz_from_string(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "hea1") return AnsatzKind::HEA1;
    if (s == "hea2") return AnsatzKind::HEA2;
    if (s == "xxz_hva" || s == "xxz") return AnsatzKind::XXZ_HVA;
    throw ContractError("unknown ansatz: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Templates

const GateSpec& CircuitTemplate::gate(const OpRef& ref) const {
    if (ref.layer < 0) return preamble.at(ref.index);
    return layers.at(static_cast<std::size_t>(ref.layer)).at(ref.index);
}

std::size_t CircuitTemplate::rotation_count() const {
    auto count = [](const std::vector<GateSpec>& gs) {
        return static_cast<std::size_t>(
            std::count_if(gs.begin(), gs.end(), [](const GateSpec& g) { return g.kind == GateKind::Rotation; }));
    };
    std::size_t c = count(preamble);
    for (const auto& l : layers) c += count(l);
    return c;
}

std::size_t CircuitTemplate::first_repeated_slot() const {
    std::size_t best = parameter_count;
    for (const auto& g : layers.front()) {
        if (g.parameter_slot) best = std::min(best, *g.parameter_slot);
    }
    if (best == parameter_count) throw ContractError("first repeated layer has no parameters");
    return best;
}

std::pair<CircuitTemplate, std::vector<std::size_t>> CircuitTemplate::unshared() const {
    CircuitTemplate t = *this;
    std::vector<std::size_t> origin;
    auto relabel = [&](std::vector<GateSpec>& gs) {
        for (auto& g : gs) {
            if (!g.parameter_slot) continue;
            origin.push_back(*g.parameter_slot);
            g.parameter_slot = origin.size() - 1;
        }
    };
    relabel(t.preamble);
    for (auto& l : t.layers) relabel(l);
    index_slots(t);
    return {std::move(t), std::move(origin)};
}

CircuitTemplate build_hea1(int n_qubits, int n_layers, Rng& rng) {
    check_shape(n_qubits, n_layers);
    CircuitTemplate t;
    t.kind = AnsatzKind::HEA1;
    t.n_qubits = n_qubits;
    t.n_layers = n_layers;
    const auto n = static_cast<std::size_t>(n_qubits);
    for (int l = 0; l < n_layers; ++l) {
        std::vector<GateSpec> layer;
        const std::size_t base = static_cast<std::size_t>(l) * 2 * n;
        for (int q = 0; q < n_qubits; ++q)
            layer.push_back(GateSpec::rotation(q, random_axis(rng), base + static_cast<std::size_t>(q)));
        for (auto [a, b] : even_pairs(n_qubits)) layer.push_back(GateSpec::cnot(a, b));
        for (int q = 0; q < n_qubits; ++q)
            layer.push_back(GateSpec::rotation(q, random_axis(rng), base + n + static_cast<std::size_t>(q)));
        for (auto [a, b] : odd_pairs(n_qubits)) layer.push_back(GateSpec::cnot(a, b));
        t.layers.push_back(std::move(layer));
    }
    index_slots(t);
    return t;
}

CircuitTemplate build_hea2(int n_qubits, int n_layers) {
    check_shape(n_qubits, n_layers);
    CircuitTemplate t;
    t.kind = AnsatzKind::HEA2;
    t.n_qubits = n_qubits;
    t.n_layers = n_layers;
    for (int q = 0; q < n_qubits; ++q) t.preamble.push_back(GateSpec::rotation(q, Pauli::Y, 0));
    for (int l = 0; l < n_layers; ++l) {
        std::vector<GateSpec> layer;
        const auto first = static_cast<std::size_t>(1 + 2 * l);
        for (int q = 0; q < n_qubits; ++q) layer.push_back(GateSpec::rotation(q, Pauli::Y, first));
        for (auto [a, b] : even_pairs(n_qubits)) layer.push_back(GateSpec::cnot(a, b));
        for (int q = 0; q < n_qubits; ++q) layer.push_back(GateSpec::rotation(q, Pauli::Y, first + 1));
        for (auto [a, b] : odd_pairs(n_qubits)) layer.push_back(GateSpec::cnot(a, b));
        t.layers.push_back(std::move(layer));
    }
    index_slots(t);
    return t;
}

CircuitTemplate build_xxz_hva(int n_qubits, int n_layers, double delta) {
    check_shape(n_qubits, n_layers);
    CircuitTemplate t;
    t.kind = AnsatzKind::XXZ_HVA;
    t.n_qubits = n_qubits;
    t.n_layers = n_layers;
    t.delta = delta;
    const Mat4 singlet = singlet_preparation();
    for (auto [a, b] : even_pairs(n_qubits)) t.preamble.push_back(GateSpec::fixed_2q(a, b, singlet));
    for (int l = 0; l < n_layers; ++l) {
        std::vector<GateSpec> layer;
        const auto first = static_cast<std::size_t>(2 * l);
        for (auto [a, b] : odd_pairs(n_qubits)) layer.push_back(GateSpec::exchange(a, b, delta, first));
        for (auto [a, b] : even_pairs(n_qubits)) layer.push_back(GateSpec::exchange(a, b, delta, first + 1));
        t.layers.push_back(std::move(layer));
    }
    index_slots(t);
    return t;
}

CircuitTemplate build_template(AnsatzKind kind, int n_qubits, int n_layers, Rng& rng, double delta) {
    switch (kind) {
    case AnsatzKind::HEA1: return build_hea1(n_qubits, n_layers, rng);
    case AnsatzKind::HEA2: return build_hea2(n_qubits, n_layers);
    case AnsatzKind::XXZ_HVA: return build_xxz_hva(n_qubits, n_layers, delta);
    }
    throw ContractError("unknown ansatz kind");
}

// ---------------------------------------------------------------------------
// Program execution

std::vector<ShiftFactor> shift_factors(const Op& op) {
    switch (op.kind) {
    case GateKind::Rotation: return {{0, 1.0}};
    case GateKind::Exchange: {
        std::vector<ShiftFactor> f{{0, 1.0}, {1, 1.0}};
        if (op.delta != 0.0) f.push_back({2, std::abs(op.delta)});
        return f;
    }
    default: return {};
    }
}

void apply_op(State& psi, const Op& op, const Program& prog, std::span<const double> theta,
              const Shift* shift) {
    const bool shifted = shift != nullptr && shift->op_id == op.id;
    switch (op.kind) {
    case GateKind::Rotation:
        apply_rotation(psi, op.q0, op.axis, op_angle(op, theta) + (shifted ? shift->amount : 0.0));
        break;
    case GateKind::Cnot: apply_cnot(psi, op.q0, op.q1); break;
    case GateKind::Fixed2q: apply_2q(psi, op.q0, op.q1, prog.fixed_gates[op.fixed]); break;
    case GateKind::Exchange: {
        double t[3];
        t[0] = t[1] = t[2] = op_angle(op, theta);
        if (shifted) t[shift->factor] += shift->amount;
        apply_exchange(psi, op.q0, op.q1, op.delta, t[0], t[1], t[2]);
        break;
    }
    }
}

void apply_op_adjoint(State& psi, const Op& op, const Program& prog, std::span<const double> theta) {
    switch (op.kind) {
    case GateKind::Rotation: apply_rotation(psi, op.q0, op.axis, -op_angle(op, theta)); break;
    case GateKind::Cnot: apply_cnot(psi, op.q0, op.q1); break;
    case GateKind::Fixed2q: apply_2q(psi, op.q0, op.q1, adjoint(prog.fixed_gates[op.fixed])); break;
    case GateKind::Exchange: {
        const double t = -op_angle(op, theta);
        apply_exchange(psi, op.q0, op.q1, op.delta, t, t, t);
        break;
    }
    }
}

void apply_op_generator(State& psi, const Op& op) {
    switch (op.kind) {
    case GateKind::Rotation: apply_pauli(psi, op.q0, op.axis); break;
    case GateKind::Exchange: apply_exchange_generator(psi, op.q0, op.q1, op.delta); break;
    default: throw ContractError("generator requested for an unparameterized gate");
    }
}

// ---------------------------------------------------------------------------
// Realizations

CircuitRealization::CircuitRealization(CircuitTemplate tmpl, double meas_prob,
                                       std::vector<MeasSite> meas_sites, std::vector<Pauli> pauli_axes,
                                       std::vector<double> theta, std::uint64_t seed)
    : tmpl_(std::move(tmpl)),
      meas_prob_(meas_prob),
      sites_(std::move(meas_sites)),
      axes_(std::move(pauli_axes)),
      theta_(std::move(theta)),
      seed_(seed) {
    if (!(meas_prob_ >= 0.0 && meas_prob_ <= 1.0)) throw ContractError("measurement probability outside [0, 1]");
    if (theta_.size() != tmpl_.parameter_count) {
        throw ContractError("theta has " + std::to_string(theta_.size()) + " entries, template expects " +
                            std::to_string(tmpl_.parameter_count));
    }
    std::sort(sites_.begin(), sites_.end());
    if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end()) {
        throw ContractError("duplicate measurement site");
    }
    for (const auto& s : sites_) {
        if (s.layer < 0 || s.layer >= tmpl_.n_layers - 1 || s.qubit < 0 || s.qubit >= tmpl_.n_qubits) {
            throw ContractError("measurement site outside the measurable (layer, qubit) range");
        }
    }
    if (!axes_.empty()) {
        if (tmpl_.kind != AnsatzKind::HEA1) throw ContractError("Pauli axes apply to HEA1 only");
        if (axes_.size() != tmpl_.rotation_count()) throw ContractError("one Pauli axis per rotation required");
        std::size_t k = 0;
        auto assign = [&](std::vector<GateSpec>& gs) {
            for (auto& g : gs)
                if (g.kind == GateKind::Rotation) g.axis = axes_[k++];
        };
        assign(tmpl_.preamble);
        for (auto& l : tmpl_.layers) assign(l);
    }
    program_ = compile(tmpl_, sites_);
}

CircuitRealization CircuitRealization::with_theta(std::vector<double> theta) const {
    if (theta.size() != tmpl_.parameter_count) throw ContractError("theta length mismatch");
    CircuitRealization r = *this;
    r.theta_ = std::move(theta);
    return r;
}

std::pair<CircuitRealization, std::vector<std::size_t>> CircuitRealization::unshared() const {
    auto [t, origin] = tmpl_.unshared();
    std::vector<double> theta(origin.size());
    for (std::size_t i = 0; i < origin.size(); ++i) theta[i] = theta_[origin[i]];
    // axes are already resolved into tmpl_
    CircuitRealization r(std::move(t), meas_prob_, sites_, {}, std::move(theta), seed_);
    r.axes_ = axes_;
    return {std::move(r), std::move(origin)};
}

CircuitRealization realize(const CircuitTemplate& tmpl, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("measurement probability outside [0, 1]");
    Rng rng(seed);
    std::vector<Pauli> axes;
    if (tmpl.kind == AnsatzKind::HEA1) {
        axes.resize(tmpl.rotation_count());
        for (auto& a : axes) a = random_axis(rng);
    }
    std::vector<MeasSite> sites;
    for (int l = 0; l + 1 < tmpl.n_layers; ++l) {
        for (int q = 0; q < tmpl.n_qubits; ++q) {
            if (uniform01(rng) < p) sites.push_back({l, q});
        }
    }
    std::vector<double> theta(tmpl.parameter_count);
    for (auto& t : theta) t = uniform(rng, -std::numbers::pi, std::numbers::pi);
    return CircuitRealization(tmpl, p, std::move(sites), std::move(axes), std::move(theta), seed);
}

nlohmann::json to_json(const CircuitRealization& r) {
    const auto& t = r.circuit_template();
    nlohmann::json j;
    j["ansatz"] = to_string(t.kind);
    j["n"] = t.n_qubits;
    j["layers"] = t.n_layers;
    if (t.kind == AnsatzKind::XXZ_HVA) j["delta"] = t.delta;
    j["p"] = r.meas_prob();
    j["seed"] = r.seed();
    auto sites = nlohmann::json::array();
    for (const auto& s : r.meas_sites()) sites.push_back({s.layer, s.qubit});
    j["meas_sites"] = std::move(sites);
    std::string axes;
    for (auto a : r.pauli_axes()) axes.push_back(to_char(a));
    j["axes"] = axes;
    j["theta"] = r.theta();
    return j;
}

CircuitRealization realization_from_json(const nlohmann::json& j) {
    try {
        const auto kind = ansatz_from_string(j.at("ansatz").get<std::string>());
        const int n = j.at("n").get<int>();
        const int layers = j.at("layers").get<int>();
        Rng unused(0);
        CircuitTemplate t = build_template(kind, n, layers, unused, j.value("delta", 0.5));
        std::vector<MeasSite> sites;
        for (const auto& s : j.at("meas_sites")) sites.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
        std::vector<Pauli> axes;
        for (char c : j.at("axes").get<std::string>()) axes.push_back(pauli_from_char(c));
        return CircuitRealization(std::move(t), j.at("p").get<double>(), std::move(sites), std::move(axes),
                                  j.at("theta").get<std::vector<double>>(), j.at("seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed realization document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Execution

OutcomeRecord make_record(std::vector<std::uint8_t> outcomes) {
    OutcomeRecord r;
    r.outcomes = std::move(outcomes);
    return r;
}

RunResult run(const CircuitRealization& r, std::span<const double> theta, Rng& rng) {
    const Program& prog = r.program();
    if (theta.size() != prog.parameter_count) throw ContractError("theta length mismatch");
    RunResult out{State(prog.n_qubits), {}};
    out.record.outcomes.reserve(prog.site_count);
    out.record.branch_probabilities.reserve(prog.site_count);
    for (const auto& seg : prog.segments) {
        for (const auto& op : seg.gates) apply_op(out.state, op, prog, theta);
        for (int q : seg.wall_qubits) {
            const auto [bit, p] = measure_qubit_inplace(out.state, q, rng);
            out.record.outcomes.push_back(static_cast<std::uint8_t>(bit));
            out.record.branch_probabilities.push_back(p);
            out.record.joint_probability *= p;
            out.record.log_probability += std::log(p);
        }
    }
    return out;
}

RunResult run_forced(const CircuitRealization& r, std::span<const double> theta, const OutcomeRecord& record,
                     const Shift* shift) {
    const Program& prog = r.program();
    if (theta.size() != prog.parameter_count) throw ContractError("theta length mismatch");
    if (record.outcomes.size() != prog.site_count) {
        throw ContractError("outcome record has " + std::to_string(record.outcomes.size()) +
                            " entries, realization has " + std::to_string(prog.site_count) + " sites");
    }
    RunResult out{State(prog.n_qubits), make_record(record.outcomes)};
    out.record.branch_probabilities.reserve(prog.site_count);
    for (const auto& seg : prog.segments) {
        for (const auto& op : seg.gates) apply_op(out.state, op, prog, theta, shift);
        for (std::size_t k = 0; k < seg.wall_qubits.size(); ++k) {
            const std::size_t site = seg.first_site + k;
            const int q = seg.wall_qubits[k];
            const int bit = record.outcomes[site];
            const double p = branch_probability(out.state, q, bit);
            if (p < kDeadBranchEpsilon) throw DeadBranchError(site, p);
            project_inplace(out.state, q, bit);
            out.state.scale(1.0 / std::sqrt(p));
            out.record.branch_probabilities.push_back(p);
            out.record.joint_probability *= p;
            out.record.log_probability += std::log(p);
        }
    }
    return out;
}

std::vector<OutcomeRecord> all_records(std::size_t site_count) {
    if (site_count > 24) throw CapacityError("refusing to enumerate more than 2^24 outcome records");
    const std::size_t total = std::size_t{1} << site_count;
    std::vector<OutcomeRecord> records;
    records.reserve(total);
    for (std::size_t m = 0; m < total; ++m) {
        std::vector<std::uint8_t> bits(site_count);
        for (std::size_t k = 0; k < site_count; ++k) bits[k] = static_cast<std::uint8_t>((m >> (site_count - 1 - k)) & 1U);
        records.push_back(make_record(std::move(bits)));
    }
    return records;
}

} // namespace mvqc
