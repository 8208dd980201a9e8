#pragma once

// Limited-memory BFGS with a strong-Wolfe line search.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvqc {

/// Returns f(x) and writes the gradient into `grad`. May throw
/// DeadBranchError, which aborts the run.
using ValueAndGradient = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
    int memory = 10;
    int max_iters = 500;
    double grad_tol = 1e-7;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_evals = 40;
    bool keep_theta_history = false;
};

enum class StopReason : std::uint8_t { GradientTolerance, IterationCap, LineSearchFailure, Aborted };

[[nodiscard]] std::string to_string(StopReason r);

struct OptTrace {
    std::vector<double> cost_history; // entry 0 is f(x0), then one per accepted step
    std::vector<std::vector<double>> theta_history;
    std::vector<double> final_theta;  // last accepted iterate
    double final_cost = 0.0;
    StopReason reason = StopReason::IterationCap;
    bool converged = false;
    bool aborted = false;
    std::string abort_message;
    std::vector<double> offending_theta; // trial point that raised, when aborted
    int evaluations = 0;
};

[[nodiscard]] OptTrace lbfgs_minimize(const ValueAndGradient& f, std::vector<double> x0,
                                      const LbfgsOptions& opts = {});

} // namespace mvqc
