// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Every check draws from the fixed master seed below; tolerances are the
// contract values and are not tuned to the outcome.
//
//   acceptance [--only <name>[,<name>...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mvqc/cli.hpp"
#include "mvqc/costgrad.hpp"
#include "mvqc/errors.hpp"
#include "mvqc/experiments.hpp"
#include "mvqc/infochannel.hpp"
#include "mvqc/mipt.hpp"
#include "mvqc/stats.hpp"

using namespace mvqc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

double norm(const Gradient& g) {
    double s = 0.0;
    for (double x : g) s += x * x;
    return std::sqrt(s);
}

double max_abs_diff(const Gradient& a, const Gradient& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ||a - b|| / ||b||, floored so an all-zero reference does not divide by zero.
double rel_diff(const Gradient& a, const Gradient& b) {
    Gradient d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return norm(d) / std::max(norm(b), 1e-8);
}

Observable obs_for(AnsatzKind kind, int n) {
    return kind == AnsatzKind::XXZ_HVA ? Observable::xxz(n, 0.5) : Observable::zz01(n);
}

constexpr AnsatzKind kAllAnsatzes[] = {AnsatzKind::HEA1, AnsatzKind::HEA2, AnsatzKind::XXZ_HVA};

// ---------------------------------------------------------------------------

Outcome gradient_triangle() {
    constexpr int kInstances = 50;
    constexpr std::size_t kMixedMaxSites = 10;
    constexpr double kShiftTol = 1e-9, kFdTol = 1e-5, kH = 1e-5;
    bool pass = true;
    std::string detail;
    Rng trng(substream(kSeed, stream_tag({1}), 0));
    for (auto kind : kAllAnsatzes) {
        const auto obs = obs_for(kind, 6);
        double worst_ps = 0.0, worst_fd = 0.0, worst_mps = 0.0, worst_mfd = 0.0;
        int proj = 0, mixed = 0;
        for (std::uint64_t s = 0; proj < kInstances || mixed < kInstances; ++s) {
            const auto r = realize(build_template(kind, 6, 8, trng), 0.3, stream_tag({kSeed, s}));
            const auto theta = r.theta();
            if (proj < kInstances) {
                Rng rng = substream(kSeed, stream_tag({2, s}), 0);
                const auto rec = run(r, theta, rng).record;
                const double min_branch =
                    rec.branch_probabilities.empty()
                        ? 1.0
                        : *std::min_element(rec.branch_probabilities.begin(), rec.branch_probabilities.end());
                // Central differences need every branch alive within h of theta.
                if (min_branch >= 1e-6) {
                    const auto a = projective_grad_analytic(r, theta, rec, obs);
                    const auto ps = projective_grad_paramshift(r, theta, rec, obs);
                    const auto fd = finite_difference_grad(
                        [&](std::span<const double> th) { return projective_cost(r, th, rec, obs).value; }, theta, kH);
                    worst_ps = std::max(worst_ps, max_abs_diff(a, ps));
                    worst_fd = std::max(worst_fd, rel_diff(a, fd));
                    ++proj;
                }
            }
            if (mixed < kInstances && r.meas_sites().size() <= kMixedMaxSites) {
                const auto me = mixed_grad(r, theta, obs, MixedGradMode::Exact);
                const auto mp = mixed_grad(r, theta, obs, MixedGradMode::ParamShift);
                const auto fd = finite_difference_grad(
                    [&](std::span<const double> th) { return mixed_cost_exact(r, th, obs).value; }, theta, kH);
                worst_mps = std::max(worst_mps, max_abs_diff(me, mp));
                worst_mfd = std::max(worst_mfd, rel_diff(me, fd));
                ++mixed;
            }
        }
        pass = pass && worst_ps <= kShiftTol && worst_fd <= kFdTol && worst_mps <= kShiftTol && worst_mfd <= kFdTol;
        detail += fmt("%s proj shift %.1e fd %.1e, mixed shift %.1e fd %.1e; ", to_string(kind).c_str(), worst_ps,
                      worst_fd, worst_mps, worst_mfd);
    }
    return {pass, detail};
}

Outcome branch_decomposition() {
    bool pass = true;
    double worst_sum = 0.0, worst_z = 0.0;
    int circuits = 0;
    Rng trng(substream(kSeed, stream_tag({3}), 0));
    for (int n : {4, 6}) {
        for (auto kind : kAllAnsatzes) {
            const auto obs = obs_for(kind, n);
            // First realization with 1..10 sites.
            for (std::uint64_t s = 0;; ++s) {
                const auto r = realize(build_template(kind, n, 4, trng), 0.3, stream_tag({kSeed, 4, s}));
                const std::size_t sites = r.meas_sites().size();
                if (sites == 0 || sites > 10) continue;
                const auto theta = r.theta();
                double sum = 0.0;
                for (const auto& rec : all_records(sites)) {
                    double p_m = 0.0, c_m = 0.0;
                    try {
                        p_m = run_forced(r, theta, rec).record.joint_probability;
                        c_m = projective_cost(r, theta, rec, obs).value;
                    } catch (const DeadBranchError&) {
                        continue; // weight below 1e-12 at some site
                    }
                    sum += p_m * c_m;
                }
                const double exact = mixed_cost_exact(r, theta, obs).value;
                Rng rng = substream(kSeed, stream_tag({5, s}), static_cast<std::uint64_t>(n));
                const auto sampled = mixed_cost_sampled(r, theta, obs, 10000, rng);
                const double z = std::abs(sampled.value - exact) / *sampled.std_error;
                worst_sum = std::max(worst_sum, std::abs(sum - exact));
                worst_z = std::max(worst_z, z);
                pass = pass && std::abs(sum - exact) <= 1e-10 && z <= 3.0;
                ++circuits;
                break;
            }
        }
    }
    return {pass, fmt("%d circuits: max |sum_M p_M C_M - C| = %.1e, max |sampled - exact| = %.2f stderr", circuits,
                      worst_sum, worst_z)};
}

Outcome zeno_endpoint() {
    const auto tmpl = build_hea2(8, 16);
    const auto r = realize(tmpl, 1.0, kSeed);
    const auto obs = Observable::zz01(8);
    const auto zeros = make_record(std::vector<std::uint8_t>(r.meas_sites().size(), 0));
    Rng rng = substream(kSeed, stream_tag({6}), 0);
    std::uniform_real_distribution<double> angle(-3.141592653589793, 3.141592653589793);
    double worst = 0.0, worst_inner = 0.0;
    int dead = 0;
    const std::size_t last = tmpl.parameter_count - 2; // the final layer's two slots
    for (int t = 0; t < 20; ++t) {
        std::vector<double> theta(tmpl.parameter_count);
        for (auto& x : theta) x = angle(rng);
        try {
            const auto g = projective_grad_analytic(r, theta, zeros, obs);
            worst = std::max(worst, norm(g));
            worst_inner = std::max(worst_inner, norm(Gradient(g.begin(), g.begin() + static_cast<long>(last))));
        } catch (const DeadBranchError&) {
            ++dead; // C_M undefined: the record has zero weight at this theta
        }
    }
    return {worst < 1e-12 && dead == 0,
            fmt("max ||grad C_M|| = %.3e over %d theta, %d theta with a dead all-zeros branch (slots before the "
                "final unmeasured layer: %.1e)",
                worst, 20 - dead, dead, worst_inner)};
}

Outcome barren_plateau() {
    VarianceConfig cfg;
    cfg.ansatz = AnsatzKind::HEA1;
    cfg.n_list = {6, 8, 10, 12};
    cfg.depth = 16;
    cfg.p_grid = {0.0, 0.2};
    cfg.n_samples = 200;
    cfg.seed = kSeed;
    cfg.workers = default_workers();
    const auto rows = variance_sweep(cfg);
    std::vector<double> ns, log_var;
    double v6 = 0.0, v12 = 0.0;
    for (const auto& row : rows) {
        if (row.p == 0.0) {
            ns.push_back(row.n);
            log_var.push_back(std::log(row.variance));
        } else {
            if (row.n == 6) v6 = row.variance;
            if (row.n == 12) v12 = row.variance;
        }
    }
    const auto fit = linear_fit(ns, log_var);
    const double ratio = v12 / v6;
    const bool pass = fit.slope < 0.0 && fit.r_squared > 0.9 && ratio >= 0.2 && ratio <= 5.0;
    return {pass, fmt("p=0: slope %.3f per qubit, R^2 %.3f; p=0.2: Var(12)/Var(6) = %.3f", fit.slope, fit.r_squared,
                      ratio)};
}

Outcome entropy_phases() {
    EntropyConfig cfg;
    cfg.ansatz = AnsatzKind::HEA2;
    cfg.n_list = {12};
    cfg.depth = 36;
    cfg.p_grid = {0.05, 0.6, 1.0};
    cfg.n_samples = 200;
    cfg.seed = kSeed;
    cfg.workers = default_workers();
    const auto low = entropy_samples(cfg, 12, 0);
    const auto mid = entropy_samples(cfg, 12, 1);
    const auto one = entropy_samples(cfg, 12, 2);
    const double s_low = mean(low), s_mid = mean(mid), s_one = mean(one);
    const double s_one_max = *std::max_element(one.begin(), one.end());
    const bool pass = s_low >= 3.0 * s_mid && s_one_max <= 2.0;
    return {pass, fmt("S(0.05) = %.3f, S(0.6) = %.3f (ratio %.2f), S(1.0) mean %.3f max %.3f bits", s_low, s_mid,
                      s_low / s_mid, s_one, s_one_max)};
}

EntropyTable planted_table(double pc, double nu, double sigma, std::uint64_t seed) {
    EntropyTable t;
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (int n : {6, 8, 10, 12})
        for (int k = 0; k <= 20; ++k) {
            const double p = 0.05 * k;
            const double s = 1.5 * (1.0 - std::tanh((p - pc) * std::pow(n, 1.0 / nu))) + noise(rng);
            t.rows.push_back({AnsatzKind::HEA2, n, 4 * n, p, s, s, s, 200, seed});
        }
    return t;
}

Outcome planted_collapse() {
    bool pass = true;
    std::string detail;
    std::uint64_t k = 0;
    for (auto [pc, nu] : {std::pair{0.3, 1.0}, std::pair{0.48, 1.3}, std::pair{0.6, 0.8}}) {
        CollapseOptions opts;
        opts.seed = kSeed;
        const auto fit = collapse_fit(planted_table(pc, nu, 0.01, stream_tag({kSeed, 7, k++})), opts);
        pass = pass && std::abs(fit.p_c - pc) <= 0.02 && std::abs(fit.nu - nu) <= 0.1;
        detail += fmt("(%.2f, %.2f) -> (%.3f, %.3f); ", pc, nu, fit.p_c, fit.nu);
    }
    return {pass, detail};
}

Outcome simulated_collapse() {
    bool pass = true;
    std::string detail;
    for (auto [kind, lo, hi] : {std::tuple{AnsatzKind::HEA2, 0.40, 0.56}, std::tuple{AnsatzKind::XXZ_HVA, 0.19, 0.35}}) {
        EntropyConfig cfg;
        cfg.ansatz = kind;
        cfg.n_list = {6, 8, 10, 12};
        for (int i = 0; i <= 20; ++i) cfg.p_grid.push_back(0.05 * i);
        cfg.n_samples = 200;
        cfg.seed = kSeed;
        cfg.workers = default_workers();
        const auto table = entropy_sweep(cfg);
        CollapseOptions opts;
        opts.seed = kSeed;
        try {
            const auto fit = collapse_fit(table, opts);
            const bool ok = fit.p_c >= lo && fit.p_c <= hi;
            pass = pass && ok;
            detail += fmt("%s p_c = %.3f +- %.3f, nu = %.2f (gate [%.2f, %.2f]); ", to_string(kind).c_str(), fit.p_c,
                          fit.p_c_err, fit.nu, lo, hi);
        } catch (const BracketError& e) {
            pass = false;
            detail += to_string(kind) + " bracket error: " + e.what() + "; ";
        }
    }
    return {pass, detail};
}

Outcome mutual_information() {
    bool pass = true;
    std::string detail;

    // Toy channels against exact summation.
    const std::vector<std::vector<double>> table = {{0.9, 0.1}, {0.8, 0.2}, {0.6, 0.4}, {0.5, 0.5},
                                                    {0.3, 0.7}, {0.2, 0.8}, {0.05, 0.95}, {0.4, 0.6}};
    const std::vector<std::vector<double>> pm = {{0.7, 0.3}, {0.2, 0.8}, {0.5, 0.5}, {0.9, 0.1}};
    const std::vector<std::vector<std::vector<double>>> pi = {
        {{0.9, 0.1}, {0.3, 0.7}}, {{0.6, 0.4}, {0.1, 0.9}}, {{0.5, 0.5}, {0.8, 0.2}}, {{0.2, 0.8}, {0.7, 0.3}}};
    MIOptions o;
    o.seed = kSeed;
    o.workers = default_workers();
    const auto nested = nested_table_channel(pm, pi);
    const auto check = [&](const char* name, const MIEstimate& e, double exact) {
        const double z = std::abs(e.bits - exact) / e.std_error;
        pass = pass && z <= 3.0;
        detail += fmt("%s %.4f vs %.4f (%.1f se); ", name, e.bits, exact, z);
    };
    check("noiseless", mi_noiseless(table_channel(table), 10000, 10000, o), exact_mi(table));
    check("aware", mi_aware(nested, 10000, 10000, 1, o), exact_mi_aware(pm, pi));
    check("unaware", mi_unaware(nested, 10000, 10000, 1000, o), exact_mi_unaware(pm, pi));

    // Saturated depth 4N: strictly decreasing in N with disjoint 1-sigma bars.
    MIConfig cfg;
    cfg.ansatz = AnsatzKind::HEA2;
    cfg.seed = kSeed;
    cfg.workers = default_workers();
    std::vector<MIRow> sat;
    for (int n : {6, 8, 10, 12}) {
        cfg.n_list = {n};
        cfg.depths = {4 * n};
        sat.push_back(mi_depth_sweep(cfg).front());
    }
    detail += "saturated I:";
    for (std::size_t i = 0; i < sat.size(); ++i) {
        detail += fmt(" N=%d %.2e+-%.1e", sat[i].n, sat[i].bits, sat[i].std_error);
        if (i > 0) pass = pass && sat[i].bits + sat[i].std_error < sat[i - 1].bits - sat[i - 1].std_error;
    }
    return {pass, detail};
}

Outcome optimization() {
    auto count_solved = [](double p) {
        OptimizeConfig cfg;
        cfg.ansatz = AnsatzKind::HEA2;
        cfg.n = 8;
        cfg.depth = 20;
        cfg.p = p;
        cfg.n_traces = 10;
        cfg.seed = kSeed;
        cfg.workers = default_workers();
        int solved = 0;
        for (const auto& run : optimize_ensemble(cfg)) solved += run.trace.final_cost <= -0.99;
        return solved;
    };
    const int c0 = count_solved(0.0), c1 = count_solved(0.1);
    bool pass = c1 > c0;
    std::string detail = fmt("ZZ01 solved traces p=0: %d/10, p=0.1: %d/10; XXZ closest gap:", c0, c1);

    const double e0 = Observable::xxz(8, 0.5).exact_ground_energy();
    for (double p : {0.0, 0.1, 0.2, 0.4, 0.6, 0.8}) {
        OptimizeConfig cfg;
        cfg.ansatz = AnsatzKind::HEA2;
        cfg.n = 8;
        cfg.depth = 20;
        cfg.p = p;
        cfg.observable = {ObservableKind::XXZ, 0.5};
        cfg.n_traces = 10;
        cfg.seed = kSeed;
        cfg.workers = default_workers();
        double gap = 1e300;
        for (const auto& run : optimize_ensemble(cfg)) gap = std::min(gap, run.trace.final_cost - e0);
        pass = pass && gap > 1e-3;
        detail += fmt(" p=%.1f %.3f", p, gap);
    }
    detail += fmt(" (E0 = %.4f)", e0);
    return {pass, detail};
}

std::vector<std::pair<std::string, std::string>> artifacts(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        out.emplace_back(fs::relative(e.path(), dir).string(), os.str());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "mvqc_acceptance_determinism";
    fs::remove_all(root);
    const fs::path entropy_dir = root / "entropy", trace_dir = root / "optimize";
    const std::vector<std::vector<std::string>> commands = {
        {"variance", "--ansatz", "hea1", "--n", "4,6", "--depth", "6", "--p", "0:0.4:0.2", "--ns", "50"},
        {"variance", "--ansatz", "hea2", "--n", "4", "--depth", "4", "--p", "0.3", "--ns", "50", "--variant", "mixed"},
        {"optimize", "--ansatz", "hea2", "--n", "4", "--depth", "4", "--p", "0.2", "--traces", "3"},
        {"landscape", "--ansatz", "hea2", "--n", "4", "--depth", "4", "--p", "0.2", "--resolution", "11"},
        {"entropy", "--ansatz", "xxz_hva", "--n", "4,6,8", "--depth", "8", "--p", "0:1:0.25", "--ns", "20"},
        {"collapse", "--input", (entropy_dir / "entropy.csv").string()},
        {"mutualinfo", "--ansatz", "hea2", "--n", "4,6", "--depths", "1,4", "--na", "200", "--nb", "200"},
        {"mutualinfo", "--ansatz", "hea2", "--n", "4", "--depths", "3", "--p", "0.3", "--estimator", "aware", "--nc",
         "2", "--na", "100", "--nb", "50"},
        {"replay", "--input", (trace_dir / "traces" / "trace_000.json").string()},
    };
    int identical = 0;
    std::string failed;
    for (const auto& base : commands) {
        const std::string name = base.front();
        const fs::path out = name == "entropy" ? entropy_dir : name == "optimize" ? trace_dir : root / "run";
        std::vector<std::vector<std::pair<std::string, std::string>>> runs;
        for (const char* workers : {"1", "3"}) {
            fs::remove_all(out);
            auto args = base;
            args.insert(args.end(), {"--seed", "1", "--workers", workers, "--out-dir", out.string()});
            std::vector<const char*> argv{"mvqc"};
            for (const auto& a : args) argv.push_back(a.c_str());
            const auto cfg = cli::parse_config(static_cast<int>(argv.size()), argv.data());
            std::ostringstream log;
            if (cli::run_experiment(cfg, log) != cli::kOk) failed += name + "(exit) ";
            runs.push_back(artifacts(out));
        }
        if (runs[0] == runs[1] && !runs[0].empty()) ++identical;
        else failed += name + " ";
    }
    fs::remove_all(root);
    return {failed.empty(), fmt("%d/%zu runs byte-identical across reruns and worker counts", identical,
                                commands.size()) + (failed.empty() ? "" : "; differing: " + failed)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient-triangle", gradient_triangle},
        {"branch-decomposition", branch_decomposition},
        {"zeno-endpoint", zeno_endpoint},
        {"barren-plateau", barren_plateau},
        {"entropy-phases", entropy_phases},
        {"collapse-planted", planted_collapse},
        {"collapse-simulated", simulated_collapse},
        {"mutual-information", mutual_information},
        {"optimization", optimization},
        {"determinism", determinism},
    };
    std::string only;
    if (argc == 3 && std::string(argv[1]) == "--only") only = "," + std::string(argv[2]) + ",";
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && only.find("," + name + ",") == std::string::npos) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %s (%.0f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
