#pragma once

/**
 * @file
 * Command-line front end. Every flag has a config-file key of the same name
 * (a flat `key = value` document); flags override the environment, which
 * overrides the file. Each run writes its outputs, an echo of the effective
 * configuration (itself a valid config file) and manifest.json into out_dir.
 *
 * Exit codes: 0 success, 2 usage, 3 aborted optimization traces,
 * 4 numerical failure, 5 I/O failure.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvqc/ansatz.hpp"
#include "mvqc/costgrad.hpp"
#include "mvqc/infochannel.hpp"
#include "mvqc/observable.hpp"

namespace mvqc::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kAborted = 3, kNumerical = 4, kIo = 5 };

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string command; // variance | optimize | landscape | entropy | collapse | mutualinfo | replay
    std::optional<AnsatzKind> ansatz;
    std::vector<int> n_list;
    std::optional<int> depth;
    std::vector<int> depths;   // mutualinfo
    std::string p_spec;        // as given, echoed verbatim
    std::vector<double> p_grid;
    CostVariant variant = CostVariant::Projective;
    int ns = 1000;
    std::optional<std::size_t> grad_index;
    ObservableKind observable = ObservableKind::ZZ01;
    double delta = 0.5;
    int traces = 10;
    int max_iters = 500;
    double grad_tol = 1e-7;
    double extent = 3.141592653589793;
    int resolution = 51;
    int trace_id = 0;
    MIEstimator estimator = MIEstimator::Noiseless;
    int na = 2000;
    int nb = 2000;
    int nc = 0;
    std::string input;        // collapse: entropy.csv; replay: trace JSON
    std::optional<double> pc0;
    std::optional<double> nu0;
    int restarts = 5;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    int workers = 1;
};

/// `start:stop:step` (endpoints inclusive within 1e-12), a comma list, or a
/// single value. UsageError on malformed input or values outside [0, 1].
[[nodiscard]] std::vector<double> parse_p_grid(const std::string& spec);
[[nodiscard]] std::vector<int> parse_int_list(const std::string& spec);

/// UsageError on unknown, conflicting or missing keys. `--help` is reported
/// as a UsageError whose message is the help text and `help_requested` set.
[[nodiscard]] ExperimentConfig parse_config(int argc, const char* const* argv, bool* help_requested = nullptr);

/// Effective configuration as a config document accepted by `--config`.
[[nodiscard]] std::string config_echo(const ExperimentConfig& cfg);

/// Runs the experiment and writes its artifacts. Returns an exit code;
/// library errors are mapped, progress lines go to `log`.
[[nodiscard]] int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// parse_config + run_experiment with error reporting on stderr.
int main_entry(int argc, const char* const* argv);

} // namespace mvqc::cli
