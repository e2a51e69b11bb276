#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hmsched {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent configuration (system, experiment or file).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear algebra failure that jitter escalation could not repair.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Carries every violation found, not just the first.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);

    [[nodiscard]] const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

}  // namespace hmsched
