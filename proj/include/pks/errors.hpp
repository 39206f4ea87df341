#pragma once

#include <stdexcept>
#include <string>

namespace pks {

/// Invalid configuration value (bad grid size, parameter out of range, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A density profile or field degenerated (zero mass, support outside grid).
struct DegenerateFieldError : std::runtime_error {
    explicit DegenerateFieldError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or species-count mismatch between operands.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/overflow or solver breakdown inside a numerical kernel.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pks
