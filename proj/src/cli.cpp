#include "mvqc/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mvqc/csv.hpp"
#include "mvqc/errors.hpp"
#include "mvqc/experiments.hpp"
#include "mvqc/mipt.hpp"

#ifndef MVQC_VERSION
#define MVQC_VERSION "unknown"
#endif

namespace mvqc::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kLandscapeStream = 51;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("malformed number in " + what + ": '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw UsageError("malformed number in " + what + ": '" + s + "'");
    return v;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string observable_name(ObservableKind k) { return k == ObservableKind::ZZ01 ? "zz01" : "xxz"; }

ObservableKind observable_from_string(const std::string& s) {
    if (s == "zz01") return ObservableKind::ZZ01;
    if (s == "xxz") return ObservableKind::XXZ;
    throw UsageError("unknown observable '" + s + "' (expected zz01 or xxz)");
}

std::string join(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Output directory bookkeeping

class Outputs {
  public:
    explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << content;
        os.close();
        if (!os) throw IoError("cannot write " + path.string());
        files_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    [[nodiscard]] const std::vector<std::string>& files() const { return files_; }
    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

struct RunStatus {
    int code = kOk;
    json extra = json::object();
};

ObservableSpec observable_spec(const ExperimentConfig& cfg) { return ObservableSpec{cfg.observable, cfg.delta}; }

json trace_json(const OptimizationRun& run, const ExperimentConfig& cfg) {
    const OptTrace& t = run.trace;
    json j;
    j["trace_id"] = run.trace_id;
    j["observable"] = {{"kind", observable_name(cfg.observable)}, {"delta", cfg.delta}};
    j["realization"] = to_json(run.realization);
    j["record"] = run.record.outcomes;
    j["record_log_probability"] = run.record.log_probability;
    j["final_theta"] = t.final_theta;
    j["final_cost"] = t.final_cost;
    j["cost_history"] = t.cost_history;
    j["stop_reason"] = to_string(t.reason);
    j["converged"] = t.converged;
    j["aborted"] = t.aborted;
    if (t.aborted) {
        j["abort_message"] = t.abort_message;
        j["offending_theta"] = t.offending_theta;
    }
    j["evaluations"] = t.evaluations;
    return j;
}

std::string trace_name(std::size_t id) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "traces/trace_%03zu.json", id);
    return buf;
}

OptimizeConfig optimize_config(const ExperimentConfig& cfg) {
    OptimizeConfig oc;
    oc.ansatz = *cfg.ansatz;
    oc.n = cfg.n_list.front();
    oc.depth = cfg.depth.value_or(20);
    oc.p = cfg.p_grid.front();
    oc.observable = observable_spec(cfg);
    oc.delta = cfg.delta;
    oc.n_traces = cfg.traces;
    oc.lbfgs.max_iters = cfg.max_iters;
    oc.lbfgs.grad_tol = cfg.grad_tol;
    oc.seed = cfg.seed;
    oc.workers = cfg.workers;
    return oc;
}

// ---------------------------------------------------------------------------
// Commands

RunStatus cmd_variance(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    VarianceConfig vc;
    vc.ansatz = *cfg.ansatz;
    vc.n_list = cfg.n_list;
    vc.depth = cfg.depth.value_or(16);
    vc.p_grid = cfg.p_grid;
    vc.variant = cfg.variant;
    vc.n_samples = cfg.ns;
    vc.grad_index = cfg.grad_index;
    vc.observable = observable_spec(cfg);
    vc.delta = cfg.delta;
    vc.seed = cfg.seed;
    vc.workers = cfg.workers;
    log << "[mvqc] variance: " << vc.n_list.size() << " sizes x " << vc.p_grid.size() << " p values, N_s=" << vc.n_samples
        << '\n';
    std::ostringstream os;
    csv::write_variance(os, variance_sweep(vc));
    out.write("variance.csv", os.str());
    return {};
}

RunStatus cmd_optimize(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    const OptimizeConfig oc = optimize_config(cfg);
    log << "[mvqc] optimize: " << oc.n_traces << " traces, n=" << oc.n << " depth=" << oc.depth << " p=" << oc.p << '\n';
    const auto runs = optimize_ensemble(oc);
    std::ostringstream os;
    csv::write_traces(os, runs);
    out.write("traces.csv", os.str());
    RunStatus st;
    json finals = json::array();
    for (const auto& run : runs) {
        out.write_json(trace_name(run.trace_id), trace_json(run, cfg));
        finals.push_back(run.trace.final_cost);
        if (run.trace.aborted) {
            st.code = kAborted;
            log << "[mvqc] trace " << run.trace_id << " aborted: " << run.trace.abort_message << '\n';
        }
    }
    st.extra["final_costs"] = finals;
    st.extra["exact_ground_energy"] = oc.observable.make(oc.n).exact_ground_energy();
    return st;
}

RunStatus cmd_landscape(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    const OptimizeConfig oc = optimize_config(cfg);
    log << "[mvqc] landscape: optimizing trace " << cfg.trace_id << '\n';
    const OptimizationRun run = optimize_one(oc, static_cast<std::size_t>(cfg.trace_id));
    const Observable obs = oc.observable.make(oc.n);
    const CostFunction cost = [&](std::span<const double> x) {
        return projective_cost(run.realization, x, run.record, obs).value;
    };
    Rng rng = substream(cfg.seed, stream_tag({kLandscapeStream}), static_cast<std::uint64_t>(cfg.trace_id));
    log << "[mvqc] landscape: " << cfg.resolution << "x" << cfg.resolution << " slice\n";
    const LandscapeSlice slice = landscape_slice(cost, run.trace.final_theta, cfg.extent, cfg.resolution, rng, cfg.workers);
    std::ostringstream os;
    csv::write_landscape(os, slice);
    out.write("landscape.csv", os.str());
    out.write_json("landscape.json", {{"center", slice.center},
                                      {"dir1", slice.dir1},
                                      {"dir2", slice.dir2},
                                      {"extent", cfg.extent},
                                      {"resolution", cfg.resolution},
                                      {"final_cost", run.trace.final_cost}});
    out.write_json(trace_name(run.trace_id), trace_json(run, cfg));
    RunStatus st;
    if (run.trace.aborted) st.code = kAborted;
    return st;
}

RunStatus cmd_entropy(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    EntropyConfig ec;
    ec.ansatz = *cfg.ansatz;
    ec.n_list = cfg.n_list;
    ec.depth = cfg.depth;
    ec.p_grid = cfg.p_grid;
    ec.n_samples = cfg.ns;
    ec.delta = cfg.delta;
    ec.seed = cfg.seed;
    ec.workers = cfg.workers;
    log << "[mvqc] entropy: " << ec.n_list.size() << " sizes x " << ec.p_grid.size() << " p values, N_s=" << ec.n_samples
        << '\n';
    std::ostringstream os;
    csv::write_entropy(os, entropy_sweep(ec));
    out.write("entropy.csv", os.str());
    return {};
}

RunStatus cmd_collapse(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    std::ifstream is(cfg.input);
    if (!is) throw IoError("cannot read " + cfg.input);
    const EntropyTable table = csv::read_entropy(is);
    CollapseOptions co;
    co.p_c0 = cfg.pc0;
    co.nu0 = cfg.nu0;
    co.restarts = cfg.restarts;
    co.seed = cfg.seed;
    log << "[mvqc] collapse: " << table.rows.size() << " rows from " << cfg.input << '\n';
    const CollapseFit fit = collapse_fit(table, co);
    const CollapseQuality q = collapse_quality(fit, table);
    json restarts = json::array();
    for (const auto& r : fit.restarts) restarts.push_back({{"p_c", r.p_c}, {"nu", r.nu}, {"R", r.R}});
    json per_size = json::array();
    for (const auto& s : q.per_size) per_size.push_back({{"n", s.n}, {"rms", s.rms}});
    json curve = json::array();
    for (const auto& [x, y] : fit.mean_curve) curve.push_back({x, y});
    out.write_json("collapse.json", {{"p_c", fit.p_c},
                                     {"p_c_err", fit.p_c_err},
                                     {"nu", fit.nu},
                                     {"nu_err", fit.nu_err},
                                     {"R", fit.R},
                                     {"restarts", restarts},
                                     {"quality", {{"per_size", per_size}, {"pooled_rms", q.pooled_rms}, {"flagged", q.flagged}}},
                                     {"mean_curve", curve}});
    log << "[mvqc] collapse: p_c=" << fit.p_c << " +- " << fit.p_c_err << ", nu=" << fit.nu << " +- " << fit.nu_err << '\n';
    return {};
}

RunStatus cmd_mutualinfo(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    MIConfig mc;
    mc.ansatz = *cfg.ansatz;
    mc.n_list = cfg.n_list;
    mc.depths = cfg.depths;
    mc.p = cfg.p_grid.empty() ? 0.0 : cfg.p_grid.front();
    mc.estimator = cfg.estimator;
    mc.n_a = cfg.na;
    mc.n_b = cfg.nb;
    mc.n_c = cfg.nc;
    mc.delta = cfg.delta;
    mc.seed = cfg.seed;
    mc.workers = cfg.workers;
    log << "[mvqc] mutualinfo: " << to_string(mc.estimator) << ", N_a=" << mc.n_a << " N_b=" << mc.n_b << '\n';
    std::ostringstream os;
    csv::write_mutualinfo(os, mi_depth_sweep(mc));
    out.write("mutualinfo.csv", os.str());
    return {};
}

RunStatus cmd_replay(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    std::ifstream is(cfg.input);
    if (!is) throw IoError("cannot read " + cfg.input);
    json j;
    try {
        is >> j;
        const CircuitRealization r = realization_from_json(j.at("realization"));
        const OutcomeRecord record = make_record(j.at("record").get<std::vector<std::uint8_t>>());
        const auto& o = j.at("observable");
        const Observable obs = ObservableSpec{observable_from_string(o.at("kind").get<std::string>()),
                                              o.at("delta").get<double>()}
                                   .make(r.n_qubits());
        const auto theta = j.at("final_theta").get<std::vector<double>>();
        const double stored = j.at("final_cost").get<double>();
        const double replayed = projective_cost_and_grad(r, theta, record, obs).cost;
        const bool identical = stored == replayed;
        out.write_json("replay.json", {{"input", std::filesystem::path(cfg.input).filename().string()},
                                       {"stored_cost", stored},
                                       {"replayed_cost", replayed},
                                       {"bit_identical", identical}});
        log << "[mvqc] replay: stored " << num(stored) << ", replayed " << num(replayed)
            << (identical ? " (identical)\n" : " (MISMATCH)\n");
        RunStatus st;
        if (!identical) st.code = kNumerical;
        return st;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed trace document: ") + e.what());
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Parsing

std::vector<double> parse_p_grid(const std::string& raw) {
    const std::string spec = trim(raw);
    if (spec.empty()) throw UsageError("empty p grid");
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(trim(part));
        if (parts.size() != 3) throw UsageError("p grid must be start:stop:step, got '" + spec + "'");
        const double start = parse_double(parts[0], "p grid");
        const double stop = parse_double(parts[1], "p grid");
        const double step = parse_double(parts[2], "p grid");
        if (!(step > 0.0) || stop < start) throw UsageError("p grid needs step > 0 and stop >= start");
        constexpr double kTol = 1e-12;
        const auto count = static_cast<long>(std::floor((stop - start) / step + kTol)) + 1;
        for (long k = 0; k < count; ++k) {
            double v = start + static_cast<double>(k) * step;
            if (std::abs(v - stop) <= kTol) v = stop; // endpoint inclusive within tolerance
            grid.push_back(v);
        }
    } else {
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ',')) grid.push_back(parse_double(trim(part), "p list"));
    }
    for (double p : grid)
        if (p < 0.0 || p > 1.0) throw UsageError("measurement probability " + num(p) + " outside [0, 1]");
    return grid;
}

std::vector<int> parse_int_list(const std::string& raw) {
    std::vector<int> out;
    std::stringstream ss(trim(raw));
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (part.empty() || used != part.size()) throw UsageError("malformed integer list '" + raw + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty integer list");
    return out;
}

ExperimentConfig parse_config(int argc, const char* const* argv, bool* help_requested) {
    if (help_requested) *help_requested = false;
    CLI::App app{"Monitored variational circuit studies", "mvqc"};
    app.set_config("--config", "", "Config file of key = value lines (keys match flag names)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    ExperimentConfig cfg;
    std::string ansatz_s, n_s, depths_s, variant_s = "projective", observable_s = "zz01", estimator_s = "noiseless";
    int depth = 0;
    std::size_t grad_index = 0;
    double pc0 = 0.0, nu0 = 0.0;
    std::string out_dir_s = cfg.out_dir.string();
    cfg.workers = default_workers();

    auto* o_ansatz = app.add_option("--ansatz", ansatz_s, "hea1 | hea2 | xxz_hva");
    auto* o_n = app.add_option("--n", n_s, "Qubit counts, comma separated");
    auto* o_depth = app.add_option("--depth", depth, "Repeated layers (entropy default 4N)");
    auto* o_depths = app.add_option("--depths", depths_s, "mutualinfo depth list (default 1,2,4,... and 4N)");
    auto* o_p = app.add_option("--p", cfg.p_spec, "Measurement probabilities: start:stop:step, a list, or one value");
    app.add_option("--variant", variant_s, "projective | mixed");
    app.add_option("--ns", cfg.ns, "Samples per (N, p) cell");
    auto* o_grad = app.add_option("--grad-index", grad_index, "Gradient component (default: first repeated slot)");
    app.add_option("--observable", observable_s, "zz01 | xxz");
    app.add_option("--delta", cfg.delta, "XXZ anisotropy (observable and XXZ-HVA gates)");
    app.add_option("--traces", cfg.traces, "Optimization traces");
    app.add_option("--max-iters", cfg.max_iters, "L-BFGS iteration cap");
    app.add_option("--grad-tol", cfg.grad_tol, "L-BFGS gradient-norm tolerance");
    app.add_option("--extent", cfg.extent, "Landscape half-width");
    app.add_option("--resolution", cfg.resolution, "Landscape lattice points per axis (odd)");
    app.add_option("--trace-id", cfg.trace_id, "Landscape trace index");
    app.add_option("--estimator", estimator_s, "noiseless | aware | unaware");
    app.add_option("--na", cfg.na, "Outer theta draws");
    app.add_option("--nb", cfg.nb, "Outcome (or record) draws per theta");
    auto* o_nc = app.add_option("--nc", cfg.nc, "Inner draws for the aware/unaware estimators");
    auto* o_input = app.add_option("--input", cfg.input, "collapse: entropy.csv; replay: trace JSON");
    auto* o_pc0 = app.add_option("--pc0", pc0, "Collapse starting p_c");
    auto* o_nu0 = app.add_option("--nu0", nu0, "Collapse starting nu");
    app.add_option("--restarts", cfg.restarts, "Collapse restarts");
    app.add_option("--seed", cfg.seed, "Master seed");
    app.add_option("--out-dir", out_dir_s, "Output directory (env MVQC_OUT_DIR overrides the file)");
    app.add_option("--workers", cfg.workers, "Worker threads (1 = serial)");

    const std::pair<const char*, const char*> commands[] = {
        {"variance", "Gradient variance over random initializations per (N, p)"},
        {"optimize", "L-BFGS traces on the post-selected cost"},
        {"landscape", "2-D cost slice around an optimized trace"},
        {"entropy", "Half-chain entanglement entropy per (N, p)"},
        {"collapse", "Finite-size scaling collapse of an entropy.csv"},
        {"mutualinfo", "Parameter-outcome mutual information vs depth"},
        {"replay", "Recompute a stored trace's final cost"},
    };
    for (auto [name, what] : commands) app.add_subcommand(name, what)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        if (help_requested) *help_requested = true;
        throw UsageError(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    cfg.command = app.get_subcommands().front()->get_name();
    cfg.out_dir = out_dir_s;
    // CLI11 ranks config files above the environment; the intended order is flag > env > file.
    if (const char* env = std::getenv("MVQC_OUT_DIR"); env && *env) {
        bool flagged = false;
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            flagged = flagged || a == "--out-dir" || a.rfind("--out-dir=", 0) == 0;
        }
        if (!flagged) cfg.out_dir = env;
    }
    if (o_depth->count() && o_depths->count()) throw UsageError("--depth and --depths are mutually exclusive");
    if (o_depth->count()) {
        if (depth < 1) throw UsageError("--depth must be >= 1");
        cfg.depth = depth;
    }
    if (o_depths->count()) cfg.depths = parse_int_list(depths_s);
    if (o_grad->count()) cfg.grad_index = grad_index;
    if (o_pc0->count()) cfg.pc0 = pc0;
    if (o_nu0->count()) cfg.nu0 = nu0;
    if (o_n->count()) cfg.n_list = parse_int_list(n_s);
    if (o_p->count()) cfg.p_grid = parse_p_grid(cfg.p_spec);
    if (cfg.workers < 1) throw UsageError("--workers must be >= 1");
    try {
        if (o_ansatz->count()) cfg.ansatz = ansatz_from_string(ansatz_s);
        cfg.variant = variant_from_string(variant_s);
        cfg.estimator = mi_estimator_from_string(estimator_s);
    } catch (const ContractError& e) {
        throw UsageError(e.what());
    }
    cfg.observable = observable_from_string(observable_s);

    const std::string& c = cfg.command;
    auto require = [&](bool present, const char* key) {
        if (!present) throw UsageError(c + " requires --" + key);
    };
    const bool circuit = c != "collapse" && c != "replay";
    if (circuit) {
        require(cfg.ansatz.has_value(), "ansatz");
        require(!cfg.n_list.empty(), "n");
        for (int n : cfg.n_list)
            if (n < 2 || n % 2 != 0) throw UsageError("qubit counts must be even and >= 2");
    } else {
        require(o_input->count() > 0, "input");
    }
    if (c == "variance" || c == "entropy" || c == "optimize" || c == "landscape") require(!cfg.p_grid.empty(), "p");
    if (c == "optimize" || c == "landscape") {
        if (cfg.n_list.size() != 1) throw UsageError(c + " takes a single --n");
        if (cfg.p_grid.size() != 1) throw UsageError(c + " takes a single --p");
    }
    if (c == "variance" && cfg.ns < 50) throw UsageError("variance needs --ns >= 50");
    if (c == "entropy" && cfg.ns < 2) throw UsageError("entropy needs --ns >= 2");
    if (c == "mutualinfo") {
        if (cfg.p_grid.size() > 1) throw UsageError("mutualinfo takes a single --p");
        const double p = cfg.p_grid.empty() ? 0.0 : cfg.p_grid.front();
        if (cfg.estimator == MIEstimator::Noiseless) {
            if (p > 0.0) throw UsageError("the noiseless estimator conflicts with --p > 0");
            if (o_nc->count()) throw UsageError("--nc conflicts with the noiseless estimator");
        } else if (cfg.nc < 1) {
            throw UsageError("the " + estimator_s + " estimator requires --nc >= 1");
        }
    }
    if (c != "mutualinfo" && o_depths->count()) throw UsageError("--depths applies to mutualinfo only");
    return cfg;
}

std::string config_echo(const ExperimentConfig& cfg) {
    std::ostringstream os;
    auto str = [&](const char* key, const std::string& v) { os << key << " = \"" << v << "\"\n"; };
    os << "# mvqc " << cfg.command << " (" << MVQC_VERSION << ")\n";
    if (cfg.ansatz) str("ansatz", to_string(*cfg.ansatz));
    if (!cfg.n_list.empty()) str("n", join(cfg.n_list));
    if (cfg.depth) os << "depth = " << *cfg.depth << '\n';
    if (!cfg.depths.empty()) str("depths", join(cfg.depths));
    if (!cfg.p_spec.empty()) str("p", trim(cfg.p_spec));
    str("variant", to_string(cfg.variant));
    os << "ns = " << cfg.ns << '\n';
    if (cfg.grad_index) os << "grad-index = " << *cfg.grad_index << '\n';
    str("observable", observable_name(cfg.observable));
    os << "delta = " << num(cfg.delta) << '\n';
    os << "traces = " << cfg.traces << '\n';
    os << "max-iters = " << cfg.max_iters << '\n';
    os << "grad-tol = " << num(cfg.grad_tol) << '\n';
    os << "extent = " << num(cfg.extent) << '\n';
    os << "resolution = " << cfg.resolution << '\n';
    os << "trace-id = " << cfg.trace_id << '\n';
    str("estimator", to_string(cfg.estimator));
    os << "na = " << cfg.na << '\n';
    os << "nb = " << cfg.nb << '\n';
    if (cfg.nc > 0) os << "nc = " << cfg.nc << '\n';
    if (!cfg.input.empty()) str("input", cfg.input);
    if (cfg.pc0) os << "pc0 = " << num(*cfg.pc0) << '\n';
    if (cfg.nu0) os << "nu0 = " << num(*cfg.nu0) << '\n';
    os << "restarts = " << cfg.restarts << '\n';
    os << "seed = " << cfg.seed << '\n';
    str("out-dir", cfg.out_dir.string());
    return os.str();
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Outputs> out;
    RunStatus st;
    try {
        out.emplace(cfg.out_dir);
        out->write("config.toml", config_echo(cfg));
        const std::string& c = cfg.command;
        if (c == "variance") st = cmd_variance(cfg, *out, log);
        else if (c == "optimize") st = cmd_optimize(cfg, *out, log);
        else if (c == "landscape") st = cmd_landscape(cfg, *out, log);
        else if (c == "entropy") st = cmd_entropy(cfg, *out, log);
        else if (c == "collapse") st = cmd_collapse(cfg, *out, log);
        else if (c == "mutualinfo") st = cmd_mutualinfo(cfg, *out, log);
        else if (c == "replay") st = cmd_replay(cfg, *out, log);
        else throw UsageError("unknown command " + c);
    } catch (const IoError& e) {
        log << "[mvqc] I/O error: " << e.what() << '\n';
        if (!out) return kIo;
        st.code = kIo;
    } catch (const BracketError& e) {
        log << "[mvqc] numerical error: " << e.what() << '\n';
        st.code = kNumerical;
    } catch (const NumericalError& e) {
        log << "[mvqc] numerical error: " << e.what() << '\n';
        st.code = kNumerical;
    } catch (const CapacityError& e) {
        log << "[mvqc] numerical error: " << e.what() << '\n';
        st.code = kNumerical;
    } catch (const DeadBranchError& e) {
        log << "[mvqc] numerical error: " << e.what() << '\n';
        st.code = kNumerical;
    } catch (const UsageError& e) {
        log << "[mvqc] usage error: " << e.what() << '\n';
        st.code = kUsage;
    } catch (const std::invalid_argument& e) { // ContractError, SizeError-style misuse
        log << "[mvqc] usage error: " << e.what() << '\n';
        st.code = kUsage;
    } catch (const std::out_of_range& e) {
        log << "[mvqc] usage error: " << e.what() << '\n';
        st.code = kUsage;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = {{"version", MVQC_VERSION},
                     {"command", cfg.command},
                     {"seed", cfg.seed},
                     {"wall_time_seconds", wall},
                     {"exit_code", st.code},
                     {"outputs", out->files()}};
    for (auto& [k, v] : st.extra.items()) manifest[k] = v;
    try {
        out->write_json("manifest.json", manifest);
    } catch (const IoError& e) {
        log << "[mvqc] I/O error: " << e.what() << '\n';
        return kIo;
    }
    log << "[mvqc] " << cfg.command << " finished in " << num(wall) << " s, exit " << st.code << '\n';
    return st.code;
}

int main_entry(int argc, const char* const* argv) {
    ExperimentConfig cfg;
    bool help = false;
    try {
        cfg = parse_config(argc, argv, &help);
    } catch (const UsageError& e) {
        if (help) {
            std::cout << e.what();
            return kOk;
        }
        std::cerr << "mvqc: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    }
    return run_experiment(cfg, std::cerr);
}

} // namespace mvqc::cli
