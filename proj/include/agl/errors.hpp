#pragma once

#include <stdexcept>
#include <string>

namespace agl {

// Bad parameter values (precondition violations).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Arrays that do not match the grid they are used with.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Iterative solver gave up. Carries the last residual.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual(last_residual) {}
    double residual;
};

}  // namespace agl
