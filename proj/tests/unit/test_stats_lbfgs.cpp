#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "mvqc/errors.hpp"
#include "mvqc/lbfgs.hpp"
#include "mvqc/stats.hpp"

using namespace mvqc;

TEST_CASE("mean and sample variance") {
    const std::vector<double> xs{1.0, 2.0, 4.0, 7.0};
    CHECK(mean(xs) == 3.5);
    CHECK(sample_variance(xs) == doctest::Approx(7.0).epsilon(1e-14));
    const std::vector<double> one{5.0};
    CHECK(sample_variance(one) == 0.0);
}

TEST_CASE("bootstrap interval for the mean covers the truth at about the nominal rate") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(2.0, 1.5);
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> xs(200);
        for (auto& x : xs) x = g(rng);
        const auto ci = bootstrap_ci(xs, Statistic::Mean, 1000, 0.95, static_cast<std::uint64_t>(t));
        CHECK(ci.low <= ci.point);
        CHECK(ci.point <= ci.high);
        covered += ci.low <= 2.0 && 2.0 <= ci.high;
    }
    CHECK(covered >= static_cast<int>(0.88 * trials));
    CHECK(covered <= static_cast<int>(0.99 * trials));
}

TEST_CASE("bootstrap is seeded and its interval always contains the point estimate") {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> e(3.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> xs(20);
        for (auto& x : xs) x = std::pow(e(rng), 4.0); // heavy skew
        const auto a = bootstrap_ci(xs, Statistic::Variance, 300, 0.95, 9);
        const auto b = bootstrap_ci(xs, Statistic::Variance, 300, 0.95, 9);
        CHECK(a.low == b.low);
        CHECK(a.high == b.high);
        CHECK(a.point == doctest::Approx(sample_variance(xs)));
        CHECK(a.low <= a.point);
        CHECK(a.point <= a.high);
    }
}

TEST_CASE("bootstrap examples") {
    const std::vector<double> flat(50, 0.3);
    const auto z = bootstrap_ci(flat, Statistic::Mean, 500, 0.95, 1);
    CHECK(z.low == z.high);
    CHECK(bootstrap_stderr(flat, 100, 1) == 0.0);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> xs(10000);
    for (auto& x : xs) x = g(rng);
    // Containment of 0 is a 95% event, so it is counted over independent samples.
    int contains = 0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        for (auto& x : xs) x = g(rng);
        const auto ci = bootstrap_ci(xs, Statistic::Mean, 2000, 0.95, rep);
        contains += ci.low <= 0.0 && 0.0 <= ci.high;
        CHECK((ci.high - ci.low) / 2.0 == doctest::Approx(1.96 / 100.0).epsilon(0.1));
    }
    CHECK(contains >= 17);

    std::bernoulli_distribution coin(0.5);
    std::vector<double> flips(10000);
    for (auto& f : flips) f = coin(rng) ? 1.0 : -1.0;
    CHECK(bootstrap_ci(flips, Statistic::Variance, 500, 0.95, 4).point == doctest::Approx(1.0).epsilon(0.01));

    CHECK_THROWS_AS((void)bootstrap_ci(flat, Statistic::Mean, 10, 1.0, 1), ContractError);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS((void)bootstrap_ci(one, Statistic::Mean, 10, 0.9, 1), ContractError);
}

TEST_CASE("bootstrap standard error tracks sigma / sqrt(n)") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 2.0);
    std::vector<double> xs(400);
    for (auto& x : xs) x = g(rng);
    const double se = bootstrap_stderr(xs, 2000, 4);
    CHECK(se == doctest::Approx(2.0 / 20.0).epsilon(0.15));
}

TEST_CASE("linear fit") {
    const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
    const auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-14));
    const std::vector<double> noisy{1.0, 2.5, 5.5, 6.5};
    const auto g = linear_fit(x, noisy);
    CHECK(g.r_squared < 1.0);
    CHECK(g.r_squared > 0.9);
}

TEST_CASE("L-BFGS minimizes the Rosenbrock function") {
    const ValueAndGradient rosen = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    LbfgsOptions opts;
    opts.grad_tol = 1e-9;
    opts.keep_theta_history = true;
    const auto tr = lbfgs_minimize(rosen, {-1.2, 1.0}, opts);
    CHECK(tr.converged);
    CHECK(tr.reason == StopReason::GradientTolerance);
    CHECK(tr.final_theta[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tr.final_theta[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tr.final_cost < 1e-8);
    CHECK(tr.theta_history.size() == tr.cost_history.size());
    for (std::size_t i = 1; i < tr.cost_history.size(); ++i) CHECK(tr.cost_history[i] <= tr.cost_history[i - 1]);
}

TEST_CASE("L-BFGS on a convex quadratic converges in few steps") {
    std::vector<double> diag;
    for (int i = 1; i <= 10; ++i) diag.push_back(i); // condition number 10
    const ValueAndGradient q = [&](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            g[i] = diag[i] * (x[i] - 1.0);
            f += 0.5 * diag[i] * (x[i] - 1.0) * (x[i] - 1.0);
        }
        return f;
    };
    const auto tr = lbfgs_minimize(q, std::vector<double>(10, 0.0));
    CHECK(tr.converged);
    CHECK(tr.cost_history.size() <= 31); // 30 iterations after the initial value
    for (double x : tr.final_theta) CHECK(std::abs(x - 1.0) < 1e-6 / std::sqrt(10.0));
}

TEST_CASE("L-BFGS stops at the iteration cap") {
    const ValueAndGradient f = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    LbfgsOptions opts;
    opts.max_iters = 3;
    const auto tr = lbfgs_minimize(f, {-1.2, 1.0}, opts);
    CHECK_FALSE(tr.converged);
    CHECK(tr.reason == StopReason::IterationCap);
    CHECK(tr.cost_history.size() <= 4);
}

TEST_CASE("a dead branch aborts the run and keeps the last accepted iterate") {
    // Descends toward x = 2; the landscape is undefined beyond x = 1.
    const ValueAndGradient f = [](std::span<const double> x, std::span<double> g) {
        if (x[0] > 1.0) throw DeadBranchError(3, 0.0);
        g[0] = 2.0 * (x[0] - 2.0);
        return (x[0] - 2.0) * (x[0] - 2.0);
    };
    const auto tr = lbfgs_minimize(f, {0.0});
    CHECK(tr.aborted);
    CHECK(tr.reason == StopReason::Aborted);
    CHECK_FALSE(tr.converged);
    CHECK(tr.abort_message.find("site 3") != std::string::npos);
    REQUIRE(tr.offending_theta.size() == 1);
    CHECK(tr.offending_theta[0] > 1.0);
    CHECK(tr.final_theta[0] <= 1.0);
    CHECK(tr.final_cost == tr.cost_history.back());
    CHECK(to_string(tr.reason) == "aborted");
}
