// errors.hpp — Exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace pme {

// Invalid model/configuration input (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Domain violation on an operation argument.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature or propagation failure, carries diagnostics (maps to CLI exit code 3).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pme
