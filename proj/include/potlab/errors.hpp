#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace potlab {

/// Thrown when an operation's stated precondition fails. Carries witness
/// cell indices when the violation is localized on the grid.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(std::string msg, std::vector<int> witness = {})
        : std::runtime_error(std::move(msg)), witness_cells(std::move(witness)) {}

    std::vector<int> witness_cells;
};

/// Thrown when an iterative solver fails to reach its stopping criterion.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::string msg, long iterations, double last_step)
        : std::runtime_error(std::move(msg)), iterations(iterations), last_step(last_step) {}

    long iterations;
    double last_step;
};

}  // namespace potlab
