#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvqc {

/// Requested size (qubit count, branch count) is out of the supported range.
class SizeError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// A caller violated an operation's preconditions.
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Exact branch enumeration would exceed the supported measurement-site count.
class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Iterative solver failed to converge, or a numerical quantity went bad.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Both measurement branches carry (numerically) zero weight.
class CorruptedStateError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// Scaling-collapse fit left (or could not stay inside) the sampled p window.
class BracketError : public ContractError {
  public:
    using ContractError::ContractError;
};

/// Channel construction requested an observable without a two-outcome
/// spectral decomposition.
class UnsupportedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A forced measurement outcome has (numerically) zero probability.
///
/// `site` is the index into the realization's ordered measurement-site list;
/// `shift` names the parameter-shift evaluation that hit the dead branch, if any.
class DeadBranchError : public std::runtime_error {
  public:
    DeadBranchError(std::size_t site, double branch_probability, std::string shift = {})
        : std::runtime_error(make_message(site, branch_probability, shift)),
          site_(site),
          branch_probability_(branch_probability),
          shift_(std::move(shift)) {}

    [[nodiscard]] std::size_t site() const noexcept { return site_; }
    [[nodiscard]] double branch_probability() const noexcept { return branch_probability_; }
    [[nodiscard]] const std::string& shift() const noexcept { return shift_; }

  private:
    static std::string make_message(std::size_t site, double prob, const std::string& shift) {
        std::string msg = "dead measurement branch at site " + std::to_string(site) +
                          " (branch probability " + std::to_string(prob) + ")";
        if (!shift.empty()) msg += " during " + shift;
        return msg;
    }

    std::size_t site_;
    double branch_probability_;
    std::string shift_;
};

} // namespace mvqc
