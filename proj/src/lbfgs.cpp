#include "mvqc/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mvqc/errors.hpp"

namespace mvqc {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Point {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0; // directional derivative
    std::vector<double> x;
    std::vector<double> g;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db), safeguarded into
// the interior of [lo, hi].
double cubic_step(const Point& a, const Point& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        const double c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
        if (std::isfinite(c)) t = c;
    }
    const double margin = 0.1 * (hi - lo);
    return std::clamp(t, lo + margin, hi - margin);
}

class LineSearch {
  public:
    LineSearch(const ValueAndGradient& f, const LbfgsOptions& o, OptTrace& trace) : f_(f), o_(o), trace_(trace) {}

    // Strong-Wolfe search along d from (x0, f0, g0); nullopt on failure.
    std::optional<Point> search(const std::vector<double>& x0, double f0, double slope0, const std::vector<double>& d,
                                double alpha1) {
        x0_ = &x0;
        d_ = &d;
        f0_ = f0;
        slope0_ = slope0;
        Point prev{0.0, f0, slope0, x0, {}};
        double alpha = alpha1;
        for (int i = 0; i < o_.max_line_evals; ++i) {
            Point cur = eval(alpha);
            if (!std::isfinite(cur.f)) {
                alpha *= 0.5;
                continue;
            }
            if (cur.f > f0 + o_.c1 * alpha * slope0 || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
            if (std::abs(cur.slope) <= -o_.c2 * slope0) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return std::nullopt;
    }

  private:
    Point eval(double alpha) {
        Point p;
        p.alpha = alpha;
        p.x.resize(x0_->size());
        p.g.resize(x0_->size());
        for (std::size_t i = 0; i < p.x.size(); ++i) p.x[i] = (*x0_)[i] + alpha * (*d_)[i];
        ++trace_.evaluations;
        try {
            p.f = f_(p.x, p.g);
        } catch (const DeadBranchError&) {
            trace_.offending_theta = p.x;
            throw;
        }
        p.slope = dot(p.g, *d_);
        return p;
    }

    std::optional<Point> zoom(Point lo, Point hi) {
        for (int i = 0; i < o_.max_line_evals; ++i) {
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
            Point cur = eval(cubic_step(lo, hi));
            if (!std::isfinite(cur.f) || cur.f > f0_ + o_.c1 * cur.alpha * slope0_ || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -o_.c2 * slope0_) return cur;
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        // Accept the best sufficient-decrease point found, if any.
        if (lo.alpha > 0.0 && lo.f < f0_) return lo;
        return std::nullopt;
    }

    const ValueAndGradient& f_;
    const LbfgsOptions& o_;
    OptTrace& trace_;
    const std::vector<double>* x0_ = nullptr;
    const std::vector<double>* d_ = nullptr;
    double f0_ = 0.0;
    double slope0_ = 0.0;
};

} // namespace

std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::IterationCap: return "iteration_cap";
    case StopReason::LineSearchFailure: return "line_search_failure";
    case StopReason::Aborted: return "aborted";
    }
    return "unknown";
}

OptTrace lbfgs_minimize(const ValueAndGradient& f, std::vector<double> x0, const LbfgsOptions& opts) {
    if (opts.max_iters < 1) throw ContractError("max_iters must be at least 1");
    if (opts.memory < 1) throw ContractError("L-BFGS memory must be at least 1");
    if (!(0.0 < opts.c1 && opts.c1 < opts.c2 && opts.c2 < 1.0)) throw ContractError("need 0 < c1 < c2 < 1");

    OptTrace trace;
    std::vector<double> x = std::move(x0);
    std::vector<double> g(x.size());
    const auto record = [&](double fx) {
        trace.cost_history.push_back(fx);
        if (opts.keep_theta_history) trace.theta_history.push_back(x);
        trace.final_theta = x;
        trace.final_cost = fx;
    };

    try {
        ++trace.evaluations;
        double fx = f(x, g);
        record(fx);

        struct Pair {
            std::vector<double> s, y;
            double rho;
        };
        std::deque<Pair> mem;
        LineSearch ls(f, opts, trace);
        std::vector<double> d(x.size());
        std::vector<double> alpha_k(static_cast<std::size_t>(opts.memory));

        for (int iter = 0; iter < opts.max_iters; ++iter) {
            if (norm(g) < opts.grad_tol) {
                trace.reason = StopReason::GradientTolerance;
                trace.converged = true;
                return trace;
            }
            // two-loop recursion: d = -H g
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
            for (std::size_t j = mem.size(); j-- > 0;) {
                alpha_k[j] = mem[j].rho * dot(mem[j].s, d);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha_k[j] * mem[j].y[i];
            }
            if (!mem.empty()) {
                const auto& last = mem.back();
                const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
                for (auto& v : d) v *= gamma;
            }
            for (std::size_t j = 0; j < mem.size(); ++j) {
                const double beta = mem[j].rho * dot(mem[j].y, d);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha_k[j] - beta) * mem[j].s[i];
            }
            double slope = dot(g, d);
            if (!(slope < 0.0)) {
                mem.clear();
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
                slope = dot(g, d);
            }
            const double alpha1 = mem.empty() ? std::min(1.0, 1.0 / norm(g)) : 1.0;
            auto step = ls.search(x, fx, slope, d, alpha1);
            if (!step) {
                trace.reason = StopReason::LineSearchFailure;
                return trace;
            }
            Pair p{std::vector<double>(x.size()), std::vector<double>(x.size()), 0.0};
            for (std::size_t i = 0; i < x.size(); ++i) {
                p.s[i] = step->x[i] - x[i];
                p.y[i] = step->g[i] - g[i];
            }
            const double sy = dot(p.s, p.y);
            x = std::move(step->x);
            g = std::move(step->g);
            fx = step->f;
            record(fx);
            if (sy > 1e-12 * norm(p.s) * norm(p.y)) {
                p.rho = 1.0 / sy;
                mem.push_back(std::move(p));
                if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
            }
        }
        trace.reason = norm(g) < opts.grad_tol ? StopReason::GradientTolerance : StopReason::IterationCap;
        trace.converged = trace.reason == StopReason::GradientTolerance;
    } catch (const DeadBranchError& e) {
        trace.reason = StopReason::Aborted;
        trace.aborted = true;
        trace.abort_message = e.what();
        if (trace.offending_theta.empty()) trace.offending_theta = x;
    }
    return trace;
}

} // namespace mvqc
