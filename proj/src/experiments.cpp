#include "mvqc/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mvqc/errors.hpp"
#include "mvqc/stats.hpp"

namespace mvqc {

namespace {

// Stream tags keep the sweeps' random streams disjoint.
constexpr std::uint64_t kVarianceStream = 1;
constexpr std::uint64_t kVarianceBootstrap = 2;
constexpr std::uint64_t kOptimizeStream = 3;

CircuitTemplate template_for(AnsatzKind kind, int n, int depth, double delta, Rng& rng) {
    return build_template(kind, n, depth, rng, delta);
}

} // namespace

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(workers) < count ? static_cast<std::size_t>(workers) : count;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

Observable ObservableSpec::make(int n_qubits) const {
    return kind == ObservableKind::ZZ01 ? Observable::zz01(n_qubits) : Observable::xxz(n_qubits, delta);
}

std::string to_string(CostVariant v) { return v == CostVariant::Projective ? "projective" : "mixed"; }

CostVariant variant_from_string(const std::string& s) {
    if (s == "projective") return CostVariant::Projective;
    if (s == "mixed") return CostVariant::Mixed;
    throw ContractError("unknown cost variant: " + s);
}

// ---------------------------------------------------------------------------
// Gradient variance

std::vector<double> gradient_samples(const VarianceConfig& cfg, int n, std::size_t p_index) {
    const double p = cfg.p_grid.at(p_index);
    const Observable obs = cfg.observable.make(n);
    const std::uint64_t tag =
        stream_tag({kVarianceStream, static_cast<std::uint64_t>(n), p_index, static_cast<std::uint64_t>(cfg.variant)});

    Rng probe(0);
    const CircuitTemplate shape = template_for(cfg.ansatz, n, cfg.depth, cfg.delta, probe);
    const std::size_t k = cfg.grad_index.value_or(shape.first_repeated_slot());
    if (k >= shape.parameter_count) {
        throw ContractError("grad_index " + std::to_string(k) + " out of range for " +
                            std::to_string(shape.parameter_count) + " parameters");
    }

    std::vector<double> out(static_cast<std::size_t>(cfg.n_samples));
    parallel_for(out.size(), cfg.workers, [&](std::size_t i) {
        Rng rng = substream(cfg.seed, tag, i);
        const CircuitTemplate tmpl = template_for(cfg.ansatz, n, cfg.depth, cfg.delta, rng);
        const CircuitRealization r = realize(tmpl, p, rng());
        if (cfg.variant == CostVariant::Projective) {
            out[i] = sample_projective_grad(r, r.theta(), obs, rng).gradient[k];
        } else if (r.program().site_count <= cfg.mixed_exact_max_sites) {
            out[i] = mixed_grad(r, r.theta(), obs, MixedGradMode::Exact)[k];
        } else {
            out[i] = mixed_grad_sampled(r, r.theta(), obs, cfg.mixed_inner_samples, rng)[k];
        }
    });
    return out;
}

std::vector<VarianceRow> variance_sweep(const VarianceConfig& cfg) {
    if (cfg.n_samples < 2) throw ContractError("variance sweep needs at least two samples per cell");
    for (int n : cfg.n_list)
        if (n < 2 || n % 2 != 0) throw ContractError("system sizes must be even and >= 2");
    std::vector<VarianceRow> rows;
    for (int n : cfg.n_list) {
        Rng probe(0);
        const std::size_t k =
            cfg.grad_index.value_or(template_for(cfg.ansatz, n, cfg.depth, cfg.delta, probe).first_repeated_slot());
        for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
            const auto samples = gradient_samples(cfg, n, pi);
            const auto ci = bootstrap_ci(samples, Statistic::Variance, cfg.bootstrap_resamples, cfg.level,
                                         stream_tag({kVarianceBootstrap, cfg.seed, static_cast<std::uint64_t>(n), pi}));
            rows.push_back(VarianceRow{cfg.ansatz, n, cfg.depth, cfg.p_grid[pi], cfg.variant, k, ci.point, ci.low,
                                       ci.high, cfg.n_samples, cfg.seed});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Optimization

OptimizationRun optimize_one(const OptimizeConfig& cfg, std::size_t trace_id) {
    Rng rng = substream(cfg.seed, stream_tag({kOptimizeStream, static_cast<std::uint64_t>(cfg.n),
                                              static_cast<std::uint64_t>(cfg.depth)}),
                        trace_id);
    const CircuitTemplate tmpl = template_for(cfg.ansatz, cfg.n, cfg.depth, cfg.delta, rng);
    CircuitRealization r = realize(tmpl, cfg.p, rng());
    const Observable obs = cfg.observable.make(cfg.n);
    OutcomeRecord record = run(r, r.theta(), rng).record;

    const ValueAndGradient f = [&](std::span<const double> x, std::span<double> g) {
        const auto cg = projective_cost_and_grad(r, x, record, obs);
        std::copy(cg.gradient.begin(), cg.gradient.end(), g.begin());
        return cg.cost;
    };
    OptTrace trace = lbfgs_minimize(f, r.theta(), cfg.lbfgs);
    return OptimizationRun{trace_id, std::move(r), std::move(record), std::move(trace)};
}

std::vector<OptimizationRun> optimize_ensemble(const OptimizeConfig& cfg) {
    if (cfg.n_traces < 1) throw ContractError("need at least one trace");
    std::vector<std::optional<OptimizationRun>> slots(static_cast<std::size_t>(cfg.n_traces));
    parallel_for(slots.size(), cfg.workers, [&](std::size_t i) { slots[i] = optimize_one(cfg, i); });
    std::vector<OptimizationRun> runs;
    runs.reserve(slots.size());
    for (auto& s : slots) runs.push_back(std::move(*s));
    return runs;
}

// ---------------------------------------------------------------------------
// Landscape

LandscapeSlice landscape_slice(const CostFunction& cost, std::span<const double> theta_star, double extent,
                               int resolution, Rng& rng, int workers) {
    if (resolution < 11 || resolution % 2 == 0) throw ContractError("resolution must be odd and >= 11");
    if (!(extent > 0.0)) throw ContractError("extent must be positive");
    const std::size_t d = theta_star.size();
    if (d < 2) throw ContractError("landscape slices need at least two parameters");

    LandscapeSlice s;
    s.center.assign(theta_star.begin(), theta_star.end());
    std::normal_distribution<double> gauss;
    s.dir1.resize(d);
    s.dir2.resize(d);
    for (auto& v : s.dir1) v = gauss(rng);
    for (auto& v : s.dir2) v = gauss(rng);
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return acc;
    };
    const double n1 = std::sqrt(dot(s.dir1, s.dir1));
    for (auto& v : s.dir1) v /= n1;
    for (int pass = 0; pass < 2; ++pass) {
        const double proj = dot(s.dir1, s.dir2);
        for (std::size_t i = 0; i < d; ++i) s.dir2[i] -= proj * s.dir1[i];
    }
    const double n2 = std::sqrt(dot(s.dir2, s.dir2));
    for (auto& v : s.dir2) v /= n2;

    const auto m = static_cast<std::size_t>(resolution);
    const auto half = static_cast<double>(m / 2);
    for (std::size_t i = 0; i < m; ++i) {
        // symmetric lattice with an exact zero at the center
        const double t = extent * (static_cast<double>(i) - half) / half;
        s.alphas.push_back(t);
        s.betas.push_back(t);
    }
    s.values.assign(m * m, std::nullopt);
    parallel_for(m, workers, [&](std::size_t i) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < d; ++k) x[k] = s.center[k] + s.alphas[i] * s.dir1[k] + s.betas[j] * s.dir2[k];
            try {
                s.values[i * m + j] = cost(x);
            } catch (const DeadBranchError&) {
                // missing cell
            }
        }
    });
    return s;
}

} // namespace mvqc
