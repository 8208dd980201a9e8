#include "mvqc/infochannel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "mvqc/costgrad.hpp"
#include "mvqc/errors.hpp"
#include "mvqc/experiments.hpp"
#include "mvqc/stats.hpp"

namespace mvqc {

namespace {

constexpr std::uint64_t kOuterStream = 31;
constexpr std::uint64_t kBootstrapStream = 32;
constexpr std::uint64_t kSweepRealization = 33;
constexpr std::uint64_t kSweepEstimator = 34;

// Index drawn from a discrete distribution by inversion; the last index
// absorbs rounding in the cumulative sum.
int draw_index(std::span<const double> probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

class ClampedLog {
  public:
    double operator()(double p) {
        if (p < kProbabilityFloor) {
            clamped_.fetch_add(1, std::memory_order_relaxed);
            p = kProbabilityFloor;
        }
        return std::log2(p);
    }
    [[nodiscard]] std::size_t clamped() const { return clamped_.load(); }

  private:
    std::atomic<std::size_t> clamped_{0};
};

void check_counts(int n_a, int n_b, int n_c, bool nested) {
    if (n_a < 2 || n_b < 1) throw ContractError("mutual information needs N_a >= 2 and N_b >= 1");
    if (nested && n_c < 1) throw ContractError("nested estimators need N_c >= 1");
}

std::vector<double> uniform_theta(std::size_t d, Rng& rng) {
    std::vector<double> theta(d);
    for (auto& t : theta) t = uniform(rng, -std::numbers::pi, std::numbers::pi);
    return theta;
}

MIEstimate finish(const std::vector<double>& per_a, int n_a, int n_b, int n_c, std::size_t clamped,
                  const MIOptions& opts) {
    MIEstimate est;
    est.bits = mean(per_a);
    est.std_error = bootstrap_stderr(per_a, opts.bootstrap_resamples, stream_tag({kBootstrapStream, opts.seed}));
    est.n_a = n_a;
    est.n_b = n_b;
    est.n_c = n_c;
    est.clamped = clamped;
    est.below_noise = est.bits < -3.0 * est.std_error;
    return est;
}

// Shared by the noiseless and unaware estimators: `probs_for` returns the
// (possibly estimated) p(.|theta_a) and may draw from the outer stream.
template <class ProbsFor>
MIEstimate marginal_estimator(const ChannelSampler& ch, int n_a, int n_b, int n_c, const MIOptions& opts,
                              ProbsFor probs_for) {
    const auto na = static_cast<std::size_t>(n_a);
    std::vector<std::vector<double>> probs(na);
    std::vector<std::vector<int>> outcomes(na);
    parallel_for(na, opts.workers, [&](std::size_t a) {
        Rng rng = substream(opts.seed, kOuterStream, a);
        const std::vector<double> theta = ch.draw_theta(rng);
        probs[a] = probs_for(theta, rng);
        outcomes[a].resize(static_cast<std::size_t>(n_b));
        for (auto& i : outcomes[a]) i = draw_index(probs[a], rng);
    });

    std::vector<double> p_b(static_cast<std::size_t>(ch.n_outcomes), 0.0);
    for (const auto& pa : probs)
        for (std::size_t i = 0; i < p_b.size(); ++i) p_b[i] += pa[i] / static_cast<double>(na);

    ClampedLog log2c;
    std::vector<double> log_pb(p_b.size());
    for (std::size_t i = 0; i < p_b.size(); ++i) log_pb[i] = log2c(p_b[i]);
    std::vector<double> per_a(na);
    for (std::size_t a = 0; a < na; ++a) {
        double acc = 0.0;
        for (int i : outcomes[a]) acc += log2c(probs[a][static_cast<std::size_t>(i)]) - log_pb[static_cast<std::size_t>(i)];
        per_a[a] = acc / n_b;
    }
    return finish(per_a, n_a, n_b, n_c, log2c.clamped(), opts);
}

} // namespace

MIEstimate mi_noiseless(const ChannelSampler& ch, int n_a, int n_b, const MIOptions& opts) {
    check_counts(n_a, n_b, 0, false);
    return marginal_estimator(ch, n_a, n_b, 0, opts,
                              [&](std::span<const double> theta, Rng&) { return ch.outcome_probs(theta); });
}

MIEstimate mi_unaware(const ChannelSampler& ch, int n_a, int n_b, int n_c, const MIOptions& opts) {
    if (!ch.nested) throw ContractError("unaware estimator needs a channel with intermediate measurements");
    check_counts(n_a, n_b, n_c, true);
    const NestedSampler& nest = *ch.nested;
    return marginal_estimator(ch, n_a, n_b, n_c, opts, [&](std::span<const double> theta, Rng& rng) {
        // Weighting distinct records by count / N_c keeps a single branch exact.
        std::map<MeasRecord, int> seen;
        for (int c = 0; c < n_c; ++c) ++seen[nest.sample_m(theta, rng)];
        std::vector<double> p(static_cast<std::size_t>(ch.n_outcomes), 0.0);
        for (const auto& [m, count] : seen) {
            const BranchProbs bp = nest.branch(theta, m);
            const double w = static_cast<double>(count) / n_c;
            for (std::size_t i = 0; i < p.size(); ++i) p[i] += w * bp.p_i_given_m[i];
        }
        return p;
    });
}

MIEstimate mi_aware(const ChannelSampler& ch, int n_a, int n_b, int n_c, const MIOptions& opts) {
    if (!ch.nested) throw ContractError("aware estimator needs a channel with intermediate measurements");
    check_counts(n_a, n_b, n_c, true);
    const NestedSampler& nest = *ch.nested;
    const auto na = static_cast<std::size_t>(n_a);
    // Repeated records under one theta_a share (p_m, p(i|m)); only their
    // outcome counts differ, so draws are folded per (a, m).
    struct Branch {
        double p_m = 0.0;
        std::vector<double> p_i;
        std::vector<long> counts;
    };
    std::vector<std::vector<double>> thetas(na);
    std::vector<std::map<MeasRecord, Branch>> branches(na);
    const auto n_out = static_cast<std::size_t>(ch.n_outcomes);
    parallel_for(na, opts.workers, [&](std::size_t a) {
        Rng rng = substream(opts.seed, kOuterStream, a);
        thetas[a] = ch.draw_theta(rng);
        for (int b = 0; b < n_b; ++b) {
            MeasRecord m = nest.sample_m(thetas[a], rng);
            auto [it, fresh] = branches[a].try_emplace(std::move(m));
            Branch& br = it->second;
            if (fresh) {
                BranchProbs bp = nest.branch(thetas[a], it->first);
                br.p_m = bp.p_m;
                br.p_i = std::move(bp.p_i_given_m);
                br.counts.assign(n_out, 0);
            }
            for (int c = 0; c < n_c; ++c) ++br.counts[static_cast<std::size_t>(draw_index(br.p_i, rng))];
        }
    });

    // p_B(i, m) over the outer pool, once per distinct record.
    std::map<MeasRecord, std::size_t> index;
    for (const auto& ba : branches)
        for (const auto& [m, br] : ba) index.emplace(m, 0);
    std::vector<const MeasRecord*> distinct;
    distinct.reserve(index.size());
    for (auto& [m, k] : index) {
        k = distinct.size();
        distinct.push_back(&m);
    }
    std::vector<double> p_b(distinct.size() * n_out, 0.0);
    parallel_for(distinct.size(), opts.workers, [&](std::size_t k) {
        for (std::size_t a = 0; a < na; ++a) {
            const BranchProbs bp = nest.branch(thetas[a], *distinct[k]);
            if (bp.p_m <= 0.0) continue;
            for (std::size_t i = 0; i < n_out; ++i) p_b[k * n_out + i] += bp.p_m * bp.p_i_given_m[i] / static_cast<double>(na);
        }
    });

    ClampedLog log2c;
    std::vector<double> per_a(na);
    for (std::size_t a = 0; a < na; ++a) {
        double acc = 0.0;
        for (const auto& [m, br] : branches[a]) {
            const std::size_t k = index.at(m);
            for (std::size_t i = 0; i < n_out; ++i)
                if (br.counts[i] > 0)
                    acc += static_cast<double>(br.counts[i]) * (log2c(br.p_m * br.p_i[i]) - log2c(p_b[k * n_out + i]));
        }
        per_a[a] = acc / (static_cast<double>(n_b) * n_c);
    }
    return finish(per_a, n_a, n_b, n_c, log2c.clamped(), opts);
}

// ---------------------------------------------------------------------------
// Channels

ChannelSampler channel_from_circuit(const CircuitRealization& r, const Observable& obs) {
    if (!obs.two_outcome()) throw UnsupportedError("observable " + obs.name() + " has no two-outcome projector pair");
    if (obs.n_qubits() != r.n_qubits()) throw ContractError("observable and circuit qubit counts differ");
    const auto real = std::make_shared<const CircuitRealization>(r);
    const auto o = std::make_shared<const Observable>(obs);

    auto parity = [o](const State& psi) {
        const double plus = std::clamp(o->plus_weight(psi), 0.0, 1.0);
        return std::vector<double>{plus, 1.0 - plus};
    };
    auto branch = [real, parity](std::span<const double> theta, const MeasRecord& m) {
        try {
            RunResult res = run_forced(*real, theta, make_record(m));
            return BranchProbs{res.record.joint_probability, parity(res.state)};
        } catch (const DeadBranchError&) {
            return BranchProbs{};
        }
    };

    ChannelSampler ch;
    ch.n_outcomes = 2;
    ch.draw_theta = [d = r.parameter_count()](Rng& rng) { return uniform_theta(d, rng); };
    const std::size_t sites = r.program().site_count;
    if (sites == 0) {
        ch.outcome_probs = [real, parity](std::span<const double> theta) {
            return parity(run_forced(*real, theta, make_record({})).state);
        };
    } else {
        ch.outcome_probs = [real, branch, sites](std::span<const double> theta) {
            if (sites > kMaxEnumeratedSites) {
                throw CapacityError("marginal channel needs record enumeration over " + std::to_string(sites) +
                                    " sites; use the nested estimators");
            }
            std::vector<double> p(2, 0.0);
            for (const auto& rec : all_records(sites)) {
                const BranchProbs bp = branch(theta, rec.outcomes);
                if (bp.p_m <= 0.0) continue;
                for (std::size_t i = 0; i < 2; ++i) p[i] += bp.p_m * bp.p_i_given_m[i];
            }
            return p;
        };
    }
    NestedSampler nest;
    nest.sample_m = [real](std::span<const double> theta, Rng& rng) { return run(*real, theta, rng).record.outcomes; };
    nest.branch = branch;
    ch.nested = std::move(nest);
    return ch;
}

namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ContractError(std::string(what) + " has a negative entry");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-10) throw ContractError(std::string(what) + " does not sum to 1");
}

std::size_t pick_row(Rng& rng, std::size_t rows) {
    return std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng);
}

double mi_of_joint(const std::vector<std::vector<double>>& joint) {
    // joint[k][j] with uniform weight over k already folded in
    std::vector<double> col(joint.front().size(), 0.0);
    std::vector<double> row(joint.size(), 0.0);
    for (std::size_t k = 0; k < joint.size(); ++k)
        for (std::size_t j = 0; j < col.size(); ++j) {
            col[j] += joint[k][j];
            row[k] += joint[k][j];
        }
    double acc = 0.0;
    for (std::size_t k = 0; k < joint.size(); ++k)
        for (std::size_t j = 0; j < col.size(); ++j)
            if (joint[k][j] > 0.0) acc += joint[k][j] * std::log2(joint[k][j] / (row[k] * col[j]));
    return acc;
}

} // namespace

ChannelSampler table_channel(std::vector<std::vector<double>> table) {
    if (table.empty()) throw ContractError("channel table is empty");
    for (const auto& row : table) {
        if (row.size() != table.front().size()) throw ContractError("channel table rows differ in length");
        check_distribution(row, "channel table row");
    }
    const auto t = std::make_shared<const std::vector<std::vector<double>>>(std::move(table));
    ChannelSampler ch;
    ch.n_outcomes = static_cast<int>(t->front().size());
    ch.draw_theta = [t](Rng& rng) { return std::vector<double>{static_cast<double>(pick_row(rng, t->size()))}; };
    ch.outcome_probs = [t](std::span<const double> theta) { return (*t)[static_cast<std::size_t>(theta[0])]; };
    return ch;
}

ChannelSampler nested_table_channel(std::vector<std::vector<double>> p_m,
                                    std::vector<std::vector<std::vector<double>>> p_i) {
    if (p_m.empty() || p_m.size() != p_i.size()) throw ContractError("nested table shapes disagree");
    for (std::size_t k = 0; k < p_m.size(); ++k) {
        check_distribution(p_m[k], "record distribution");
        if (p_m[k].size() != p_m.front().size() || p_i[k].size() != p_m[k].size())
            throw ContractError("nested table shapes disagree");
        for (const auto& row : p_i[k]) {
            if (row.size() != p_i.front().front().size()) throw ContractError("nested table shapes disagree");
            check_distribution(row, "conditional outcome distribution");
        }
    }
    const auto pm = std::make_shared<const std::vector<std::vector<double>>>(std::move(p_m));
    const auto pi = std::make_shared<const std::vector<std::vector<std::vector<double>>>>(std::move(p_i));
    ChannelSampler ch;
    ch.n_outcomes = static_cast<int>(pi->front().front().size());
    ch.draw_theta = [pm](Rng& rng) { return std::vector<double>{static_cast<double>(pick_row(rng, pm->size()))}; };
    ch.outcome_probs = [pm, pi](std::span<const double> theta) {
        const auto k = static_cast<std::size_t>(theta[0]);
        std::vector<double> p((*pi)[k].front().size(), 0.0);
        for (std::size_t m = 0; m < (*pm)[k].size(); ++m)
            for (std::size_t i = 0; i < p.size(); ++i) p[i] += (*pm)[k][m] * (*pi)[k][m][i];
        return p;
    };
    NestedSampler nest;
    nest.sample_m = [pm](std::span<const double> theta, Rng& rng) {
        const auto k = static_cast<std::size_t>(theta[0]);
        return MeasRecord{static_cast<std::uint8_t>(draw_index((*pm)[k], rng))};
    };
    nest.branch = [pm, pi](std::span<const double> theta, const MeasRecord& m) {
        const auto k = static_cast<std::size_t>(theta[0]);
        return BranchProbs{(*pm)[k][m.at(0)], (*pi)[k][m.at(0)]};
    };
    ch.nested = std::move(nest);
    return ch;
}

ChannelSampler function_channel(std::size_t n_params, int n_outcomes,
                                std::function<std::vector<double>(std::span<const double>)> f) {
    if (n_params < 1 || n_outcomes < 1) throw ContractError("function channel needs parameters and outcomes");
    ChannelSampler ch;
    ch.n_outcomes = n_outcomes;
    ch.draw_theta = [n_params](Rng& rng) { return uniform_theta(n_params, rng); };
    ch.outcome_probs = std::move(f);
    return ch;
}

double exact_mi(const std::vector<std::vector<double>>& table) {
    auto joint = table;
    for (auto& row : joint)
        for (auto& v : row) v /= static_cast<double>(table.size());
    return mi_of_joint(joint);
}

double exact_mi_aware(const std::vector<std::vector<double>>& p_m,
                      const std::vector<std::vector<std::vector<double>>>& p_i) {
    std::vector<std::vector<double>> joint(p_m.size());
    for (std::size_t k = 0; k < p_m.size(); ++k)
        for (std::size_t m = 0; m < p_m[k].size(); ++m)
            for (double v : p_i[k][m]) joint[k].push_back(p_m[k][m] * v / static_cast<double>(p_m.size()));
    return mi_of_joint(joint);
}

double exact_mi_unaware(const std::vector<std::vector<double>>& p_m,
                        const std::vector<std::vector<std::vector<double>>>& p_i) {
    std::vector<std::vector<double>> table(p_m.size(), std::vector<double>(p_i.front().front().size(), 0.0));
    for (std::size_t k = 0; k < p_m.size(); ++k)
        for (std::size_t m = 0; m < p_m[k].size(); ++m)
            for (std::size_t i = 0; i < table[k].size(); ++i) table[k][i] += p_m[k][m] * p_i[k][m][i];
    return exact_mi(table);
}

// ---------------------------------------------------------------------------
// Sweeps

std::string to_string(MIEstimator e) {
    switch (e) {
    case MIEstimator::Noiseless: return "noiseless";
    case MIEstimator::Aware: return "aware";
    case MIEstimator::Unaware: return "unaware";
    }
    return "?";
}

MIEstimator mi_estimator_from_string(const std::string& s) {
    if (s == "noiseless") return MIEstimator::Noiseless;
    if (s == "aware") return MIEstimator::Aware;
    if (s == "unaware") return MIEstimator::Unaware;
    throw ContractError("unknown estimator: " + s);
}

std::vector<int> default_mi_depths(int n) {
    std::vector<int> depths;
    for (int d = 1; d < 4 * n; d *= 2) depths.push_back(d);
    depths.push_back(4 * n);
    return depths;
}

std::vector<MIRow> mi_depth_sweep(const MIConfig& cfg) {
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw ContractError("measurement probability must lie in [0, 1]");
    if (cfg.estimator == MIEstimator::Noiseless && cfg.p > 0.0)
        throw ContractError("the noiseless estimator requires p = 0");
    std::vector<MIRow> rows;
    for (int n : cfg.n_list) {
        const Observable obs = Observable::zz01(n);
        const std::vector<int> depths = cfg.depths.empty() ? default_mi_depths(n) : cfg.depths;
        for (int depth : depths) {
            const auto un = static_cast<std::uint64_t>(n);
            const auto ud = static_cast<std::uint64_t>(depth);
            Rng rng = substream(cfg.seed, stream_tag({kSweepRealization, un, ud}), 0);
            const CircuitTemplate tmpl = build_template(cfg.ansatz, n, depth, rng, cfg.delta);
            const CircuitRealization r = realize(tmpl, cfg.p, rng());
            const ChannelSampler ch = channel_from_circuit(r, obs);
            const MIOptions opts{200, stream_tag({kSweepEstimator, cfg.seed, un, ud}), cfg.workers};
            MIEstimate est;
            switch (cfg.estimator) {
            case MIEstimator::Noiseless: est = mi_noiseless(ch, cfg.n_a, cfg.n_b, opts); break;
            case MIEstimator::Aware: est = mi_aware(ch, cfg.n_a, cfg.n_b, cfg.n_c, opts); break;
            case MIEstimator::Unaware: est = mi_unaware(ch, cfg.n_a, cfg.n_b, cfg.n_c, opts); break;
            }
            rows.push_back(MIRow{cfg.ansatz, n, depth, cfg.p, cfg.estimator, est.bits, est.std_error, est.n_a,
                                 est.n_b, est.n_c, cfg.seed});
        }
    }
    return rows;
}

} // namespace mvqc
