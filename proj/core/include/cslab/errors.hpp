#pragma once

#include <stdexcept>
#include <string>

namespace cslab {

/// Kernel evaluated at a point where it is not finite (r = 0 with epsilon = 0).
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameters outside the range where an estimate or operation is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid experiment or solver configuration; maps to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Time step too large for the stiff drift of a scaled ensemble.
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A velocity grew by more than the configured factor within one step.
class StepRejectedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A particle left the configured safety box.
class EscapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Motsch–Tadmor normalization fell below the smallest positive double.
class NormalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A characteristic left the grid box before reaching time zero.
class DomainExitError : public std::runtime_error {
public:
    DomainExitError(const std::string& what, double exit_time)
        : std::runtime_error(what), exit_time_(exit_time) {}
    double exit_time() const noexcept { return exit_time_; }

private:
    double exit_time_;
};

/// Fewer time levels than the centered differences need.
class InsufficientSeriesError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Log-log fit impossible (non-positive data or too few points).
class DegenerateFitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dimensional linkage identities disagree beyond tolerance.
class InconsistencyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace cslab
