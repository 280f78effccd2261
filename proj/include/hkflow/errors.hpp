#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hkflow {

/// Invalid model, integrator or detector parameters.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerical state became non-finite during time stepping.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time)
        : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Malformed or schema-violating configuration. Line and column are 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace hkflow
