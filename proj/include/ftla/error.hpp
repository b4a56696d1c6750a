#pragma once

#include <stdexcept>
#include <string>

namespace ftla {

// Base class for all library failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed DSL input; carries the 1-based source position of the offending token.
struct ParseError : Error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int line_, int col_)
        : Error(msg + " at line " + std::to_string(line_) + ", column " +
                std::to_string(col_)),
          line(line_),
          column(col_) {}
};

// Non-finite result or unbound parameter during evaluation.
struct EvalError : Error {
    using Error::Error;
};

// Step-size underflow, non-finite state, or a singular segment matrix.
struct IntegrationError : Error {
    using Error::Error;
};

// Degenerate or ill-conditioned linear-algebra input (rank-deficient
// complement, non-transverse splitting, complex eigenvalues, ...).
struct NumericalError : Error {
    using Error::Error;
};

// Iteration did not meet its stopping criteria within the allowed count.
struct ConvergenceError : Error {
    using Error::Error;
};

}  // namespace ftla
