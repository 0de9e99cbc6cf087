#pragma once

#include "mfgsim/common.hpp"

namespace mfgsim {

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // terminal fixed-point residual, Frobenius norm
    bool converged = false;
};

/// One application of the Riccati fixed-point map
///   K -> A'KA - A'K'B (R + B'KB)^{-1} B'KA + Q.
Matrix dare_rhs(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                const Matrix& K);

/// Solves the discrete algebraic Riccati equation by fixed-point iteration
/// from K = Q. Requires R > 0 and a stabilizable/detectable pair (caller-checked).
/// Throws SolverError on non-convergence or a numerically singular R + B'KB.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  double tol, int max_iter, SolveReport* report = nullptr);

/// Solves M = Q + Hc M L by geometric-series iteration from M = Q.
/// Converges iff ||Hc|| ||L|| < 1; a growing residual over 10 consecutive
/// iterations is reported as a contraction violation (SolverError).
Matrix solve_stein(const Matrix& Hc, const Matrix& Q, const Matrix& L,
                   double tol, int max_iter, SolveReport* report = nullptr);

/// Largest singular value via power iteration on M'M with a deterministic
/// all-ones start vector. Zero matrix yields 0.
double spectral_norm(const Matrix& M);

}  // namespace mfgsim
