#include "mvqc/mipt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mvqc/errors.hpp"
#include "mvqc/experiments.hpp"
#include "mvqc/lbfgs.hpp"
#include "mvqc/stats.hpp"

namespace mvqc {

namespace {

constexpr std::uint64_t kEntropyStream = 11;
constexpr std::uint64_t kEntropyBootstrap = 12;

struct Curve {
    int n;
    std::vector<double> p;
    std::vector<double> s;
};

// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
// slopes). Linear interpolation biases nu: its curvature error differs
// between sizes once N^{1/nu} stretches the grid spacing to the width of the
// crossover. xs strictly ascending; constant extrapolation outside.
class Pchip {
  public:
    Pchip(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)), d_(x_.size(), 0.0) {
        const std::size_t n = x_.size();
        if (n < 2) return;
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = delta[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) continue; // local extremum: flat
            const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }

    double operator()(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        if (it == x_.begin()) return y_.front();
        if (it == x_.end()) return y_.back();
        const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
               (t3 - t2) * h * d_[i + 1];
    }

  private:
    static double end_slope(double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

std::vector<Curve> curves_of(const EntropyTable& table) {
    std::map<int, std::vector<std::pair<double, double>>> by_n;
    for (const auto& r : table.rows) by_n[r.n].emplace_back(r.p, r.mean_entropy_bits);
    if (by_n.size() < 3) {
        throw BracketError("scaling collapse needs at least three system sizes, got " + std::to_string(by_n.size()));
    }
    std::vector<Curve> curves;
    for (auto& [n, pts] : by_n) {
        std::sort(pts.begin(), pts.end());
        Curve c{n, {}, {}};
        for (const auto& [p, s] : pts) {
            if (!c.p.empty() && p == c.p.back()) throw ContractError("duplicate p for one system size");
            c.p.push_back(p);
            c.s.push_back(s);
        }
        if (c.p.size() < 3) throw ContractError("each system size needs at least three p values");
        curves.push_back(std::move(c));
    }
    return curves;
}

struct Bounds {
    double p_lo, p_hi, nu_lo, nu_hi;
};

Bounds search_bounds(const std::vector<Curve>& curves, const CollapseOptions& o) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double step = std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        lo = std::max(lo, c.p.front());
        hi = std::min(hi, c.p.back());
        for (std::size_t i = 1; i < c.p.size(); ++i) step = std::min(step, c.p[i] - c.p[i - 1]);
    }
    if (!(hi - lo > 2.0 * step)) throw BracketError("p grids of the system sizes do not overlap enough to bracket p_c");
    return {lo + step, hi - step, o.nu_min, o.nu_max};
}

struct Collapse {
    std::vector<double> grid;
    std::vector<double> ybar;
    std::vector<std::vector<double>> y; // per curve, on grid
    bool valid = false;
};

Collapse collapse(const std::vector<Curve>& curves, double p_c, double nu) {
    Collapse out;
    std::vector<std::vector<double>> xs(curves.size()), ys(curves.size());
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const double scale = std::pow(static_cast<double>(c.n), 1.0 / nu);
        const double s_c = Pchip(c.p, c.s)(p_c);
        for (std::size_t i = 0; i < c.p.size(); ++i) {
            xs[k].push_back((c.p[i] - p_c) * scale);
            ys[k].push_back(c.s[i] - s_c);
        }
        lo = std::max(lo, xs[k].front());
        hi = std::min(hi, xs[k].back());
    }
    if (!(lo < hi)) return out;
    for (const auto& x : xs)
        for (double v : x)
            if (v >= lo && v <= hi) out.grid.push_back(v);
    std::sort(out.grid.begin(), out.grid.end());
    out.grid.erase(std::unique(out.grid.begin(), out.grid.end(), [](double a, double b) { return b - a < 1e-12; }),
                   out.grid.end());
    if (out.grid.size() < 2) return out;
    out.y.assign(curves.size(), std::vector<double>(out.grid.size()));
    out.ybar.assign(out.grid.size(), 0.0);
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const Pchip f(xs[k], ys[k]);
        for (std::size_t g = 0; g < out.grid.size(); ++g) {
            out.y[k][g] = f(out.grid[g]);
            out.ybar[g] += out.y[k][g] / static_cast<double>(curves.size());
        }
    }
    out.valid = true;
    return out;
}

double residual(const std::vector<Curve>& curves, double p_c, double nu) {
    const Collapse c = collapse(curves, p_c, nu);
    if (!c.valid) return std::numeric_limits<double>::infinity();
    double r = 0.0;
    for (const auto& yk : c.y)
        for (std::size_t g = 0; g < c.grid.size(); ++g) r += (yk[g] - c.ybar[g]) * (yk[g] - c.ybar[g]);
    return r / static_cast<double>(c.grid.size());
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double t) { return std::log(t / (1.0 - t)); }

// Quasi-Newton descent on R in unbounded logit coordinates of the box.
CollapseEstimate local_search(const std::vector<Curve>& curves, const Bounds& b, double p_c, double nu) {
    const auto to_u = [](double v, double lo, double hi) {
        return logit(std::clamp((v - lo) / (hi - lo), 1e-6, 1.0 - 1e-6));
    };
    const auto from_u = [&](std::span<const double> u) {
        return std::pair{b.p_lo + (b.p_hi - b.p_lo) * sigmoid(u[0]), b.nu_lo + (b.nu_hi - b.nu_lo) * sigmoid(u[1])};
    };
    const auto r_of = [&](std::span<const double> u) {
        const auto [pc, v] = from_u(u);
        return residual(curves, pc, v);
    };
    const ValueAndGradient f = [&](std::span<const double> u, std::span<double> g) {
        constexpr double h = 1e-6;
        std::vector<double> w(u.begin(), u.end());
        for (std::size_t k = 0; k < 2; ++k) {
            w[k] = u[k] + h;
            const double up = r_of(w);
            w[k] = u[k] - h;
            const double down = r_of(w);
            w[k] = u[k];
            g[k] = (up - down) / (2.0 * h);
            if (!std::isfinite(g[k])) g[k] = 0.0;
        }
        return r_of(u);
    };
    LbfgsOptions o;
    o.grad_tol = 1e-10;
    o.max_iters = 200;
    const OptTrace t = lbfgs_minimize(f, {to_u(p_c, b.p_lo, b.p_hi), to_u(nu, b.nu_lo, b.nu_hi)}, o);
    const auto [pc, v] = from_u(t.final_theta);
    return {pc, v, t.final_cost};
}

} // namespace

// ---------------------------------------------------------------------------
// Entropy sweeps

std::vector<double> entropy_samples(const EntropyConfig& cfg, int n, std::size_t p_index) {
    const double p = cfg.p_grid.at(p_index);
    const int depth = cfg.depth_for(n);
    const std::uint64_t tag = stream_tag({kEntropyStream, static_cast<std::uint64_t>(n), p_index,
                                          static_cast<std::uint64_t>(cfg.ansatz)});
    const auto cut = half_chain(n);
    std::vector<double> out(static_cast<std::size_t>(cfg.n_samples));
    parallel_for(out.size(), cfg.workers, [&](std::size_t i) {
        Rng rng = substream(cfg.seed, tag, i);
        const CircuitTemplate tmpl = build_template(cfg.ansatz, n, depth, rng, cfg.delta);
        const CircuitRealization r = realize(tmpl, p, rng());
        out[i] = entanglement_entropy(run(r, r.theta(), rng).state, cut).entropy_bits;
    });
    return out;
}

EntropyTable entropy_sweep(const EntropyConfig& cfg) {
    if (cfg.n_samples < 2) throw ContractError("entropy sweep needs at least two samples per cell");
    for (int n : cfg.n_list)
        if (n < 2 || n % 2 != 0) throw ContractError("system sizes must be even and >= 2");
    for (double p : cfg.p_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw ContractError("measurement probabilities must lie in [0, 1]");
    EntropyTable table;
    table.ansatz = cfg.ansatz;
    for (int n : cfg.n_list) {
        for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
            const auto s = entropy_samples(cfg, n, pi);
            const auto ci = bootstrap_ci(s, Statistic::Mean, cfg.bootstrap_resamples, cfg.level,
                                         stream_tag({kEntropyBootstrap, cfg.seed, static_cast<std::uint64_t>(n), pi}));
            table.rows.push_back(EntropyRow{cfg.ansatz, n, cfg.depth_for(n), cfg.p_grid[pi], ci.point, ci.low, ci.high,
                                            cfg.n_samples, cfg.seed});
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Collapse

double collapse_residual(const EntropyTable& table, double p_c, double nu) {
    return residual(curves_of(table), p_c, nu);
}

CollapseFit collapse_fit(const EntropyTable& table, const CollapseOptions& opts) {
    if (opts.restarts < 0) throw ContractError("restart count must be nonnegative");
    if (!(0.0 < opts.nu_min && opts.nu_min < opts.nu_max)) throw ContractError("need 0 < nu_min < nu_max");
    const auto curves = curves_of(table);
    const Bounds b = search_bounds(curves, opts);

    double p0 = 0.0, nu0 = 0.0;
    if (opts.p_c0 && opts.nu0) {
        p0 = *opts.p_c0;
        nu0 = *opts.nu0;
    } else {
        double best = std::numeric_limits<double>::infinity();
        constexpr int kP = 41, kNu = 26;
        for (int i = 0; i < kP; ++i) {
            const double pc = b.p_lo + (b.p_hi - b.p_lo) * i / (kP - 1);
            for (int j = 0; j < kNu; ++j) {
                const double v = b.nu_lo + (b.nu_hi - b.nu_lo) * j / (kNu - 1);
                const double r = residual(curves, pc, v);
                if (r < best) {
                    best = r;
                    p0 = pc;
                    nu0 = v;
                }
            }
        }
        if (!std::isfinite(best)) throw BracketError("no (p_c, nu) in the search box gives overlapping curves");
    }

    CollapseFit fit;
    fit.best = local_search(curves, b, p0, nu0);
    if (opts.restarts == 0) {
        fit.p_c = fit.best.p_c;
        fit.nu = fit.best.nu;
    } else {
        Rng rng(opts.seed);
        std::vector<double> pcs, nus;
        for (int k = 0; k < opts.restarts; ++k) {
            const double pc = fit.best.p_c + uniform(rng, -opts.jitter_p_c, opts.jitter_p_c);
            const double v = fit.best.nu + uniform(rng, -opts.jitter_nu, opts.jitter_nu);
            const auto e = local_search(curves, b, std::clamp(pc, b.p_lo, b.p_hi), std::clamp(v, b.nu_lo, b.nu_hi));
            fit.restarts.push_back(e);
            pcs.push_back(e.p_c);
            nus.push_back(e.nu);
        }
        fit.p_c = mean(pcs);
        fit.nu = mean(nus);
        fit.p_c_err = std::sqrt(sample_variance(pcs));
        fit.nu_err = std::sqrt(sample_variance(nus));
    }

    const double edge = 1e-3 * (b.p_hi - b.p_lo);
    if (fit.p_c - b.p_lo < edge || b.p_hi - fit.p_c < edge) {
        throw BracketError("p_c estimate " + std::to_string(fit.p_c) + " sits on the search bound [" +
                           std::to_string(b.p_lo) + ", " + std::to_string(b.p_hi) + "]");
    }
    fit.R = residual(curves, fit.p_c, fit.nu);
    const Collapse c = collapse(curves, fit.p_c, fit.nu);
    for (std::size_t g = 0; g < c.grid.size(); ++g) fit.mean_curve.emplace_back(c.grid[g], c.ybar[g]);
    return fit;
}

CollapseQuality collapse_quality(const CollapseFit& fit, const EntropyTable& table) {
    const auto curves = curves_of(table);
    const Collapse c = collapse(curves, fit.p_c, fit.nu);
    if (!c.valid) throw ContractError("fit parameters give no overlapping support for this table");
    CollapseQuality q;
    double pooled = 0.0;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        double acc = 0.0;
        for (std::size_t g = 0; g < c.grid.size(); ++g) acc += (c.y[k][g] - c.ybar[g]) * (c.y[k][g] - c.ybar[g]);
        pooled += acc;
        q.per_size.push_back({curves[k].n, std::sqrt(acc / static_cast<double>(c.grid.size()))});
    }
    q.pooled_rms = std::sqrt(pooled / static_cast<double>(c.grid.size() * curves.size()));
    for (const auto& s : q.per_size)
        if (s.rms > 3.0 * q.pooled_rms) q.flagged.push_back(s.n);
    return q;
}

} // namespace mvqc
