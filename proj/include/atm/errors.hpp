#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace atm {

/// Operands live on different grids.
class IncompatibleGrids : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A quadratic form expected to be nonnegative came out negative.
class OperatorNotPositive : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative method hit its iteration cap. Carries the last iterate's estimate.
class ConvergenceFailure : public std::runtime_error {
public:
    ConvergenceFailure(const std::string& what, double last_estimate, std::int64_t iterations)
        : std::runtime_error(what), last_estimate_(last_estimate), iterations_(iterations) {}

    double last_estimate() const noexcept { return last_estimate_; }
    std::int64_t iterations() const noexcept { return iterations_; }

private:
    double last_estimate_;
    std::int64_t iterations_;
};

/// A three-level step was requested without the previous level.
class StartupOrderError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The semi-discrete oracle only handles constant coefficients and
/// eigenmode-shaped data.
class UnsupportedProblem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace atm
