#pragma once

#include <stdexcept>
#include <string>

namespace thinfilm {

// Each error class maps onto one CLI exit status (see harness).

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite or otherwise out-of-domain argument to a pointwise law.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Film height reached zero (or below): mobility is degenerate there.
class DegeneracyError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// psi'_sigma evaluated at its singular point (sigma = 0, s = 0, alpha < 1).
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Fit/estimator preconditions not met by the recorded data.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class WrongRegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace thinfilm
