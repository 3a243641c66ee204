#pragma once

#include <stdexcept>
#include <string>

namespace hfedf {

/// Raised when a run or split configuration is infeasible (as opposed to a
/// plain API misuse, which throws std::invalid_argument).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when training produces a non-finite loss; aborts the affected cell.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hfedf
