#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mfgsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Configuration file / schema problem. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A structural or contraction assumption does not hold. CLI exit code 3.
struct AssumptionError : std::runtime_error {
    explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to converge. Carries the last residual. CLI exit code 4.
struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual(last_residual) {}
    double residual = 0.0;
};

}  // namespace mfgsim
