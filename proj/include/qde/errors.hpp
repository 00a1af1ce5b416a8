#pragma once

#include <stdexcept>
#include <string>

namespace qde {

/// Bad numeric argument: non-finite input, dimension mismatch, index out of range.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A configuration value violates a model assumption. Carries the offending field name.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Operation called on inputs outside its precondition (e.g. lambda2 of a disconnected graph).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace qde
