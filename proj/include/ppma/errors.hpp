// ppma - error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace ppma {

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a matrix or field that must be positive-definite is not.
// Carries the offending minimum eigenvalue and, for fields, the grid index.
struct PositivityError : std::runtime_error {
    double min_eigenvalue = 0.0;
    long grid_index = -1;

    explicit PositivityError(const std::string& what, double min_eig = 0.0, long idx = -1)
        : std::runtime_error(what), min_eigenvalue(min_eig), grid_index(idx) {}
};

struct LinearSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    double residual_sup = 0.0;
    int iterations = 0;

    ConvergenceError(const std::string& what, double res, int iters)
        : std::runtime_error(what), residual_sup(res), iterations(iters) {}
};

struct StiffnessError : std::runtime_error {
    long worst_index = -1;

    explicit StiffnessError(const std::string& what, long idx = -1)
        : std::runtime_error(what), worst_index(idx) {}
};

} // namespace ppma
