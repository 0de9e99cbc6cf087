#include "mfgsim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfgsim {

namespace {

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

Matrix dare_rhs(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                const Matrix& K) {
    const Matrix S = R + B.transpose() * K * B;
    Eigen::LLT<Matrix> llt(symmetrize(S));
    if (llt.info() != Eigen::Success) {
        throw SolverError("riccati update: R + B'KB is not positive definite", 0.0);
    }
    const Matrix Pi = llt.solve(B.transpose() * K * A);
    return symmetrize(A.transpose() * K * A - A.transpose() * K.transpose() * B * Pi + Q);
}

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  double tol, int max_iter, SolveReport* report) {
    Matrix K = symmetrize(Q);
    double residual = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const Matrix next = dare_rhs(A, B, Q, R, K);
        residual = (next - K).norm();
        K = next;
        if (residual <= tol) {
            if (report) *report = {it, residual, true};
            return K;
        }
    }
    if (report) *report = {max_iter, residual, false};
    std::ostringstream msg;
    msg << "riccati iteration did not converge in " << max_iter
        << " iterations (last residual " << residual << ")";
    throw SolverError(msg.str(), residual);
}

Matrix solve_stein(const Matrix& Hc, const Matrix& Q, const Matrix& L,
                   double tol, int max_iter, SolveReport* report) {
    Matrix M = Q;
    double residual = 0.0;
    double prev_residual = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    for (int it = 1; it <= max_iter; ++it) {
        const Matrix next = Q + Hc * M * L;
        residual = (next - M).norm();
        M = next;
        if (residual <= tol) {
            if (report) *report = {it, residual, true};
            return M;
        }
        growth_streak = (residual > prev_residual) ? growth_streak + 1 : 0;
        if (growth_streak >= 10) {
            throw SolverError(
                "stein iteration diverging: contraction ||Hc||*||L|| < 1 violated", residual);
        }
        prev_residual = residual;
    }
    if (report) *report = {max_iter, residual, false};
    std::ostringstream msg;
    msg << "stein iteration did not converge in " << max_iter
        << " iterations (last residual " << residual << ")";
    throw SolverError(msg.str(), residual);
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    const Matrix G = M.transpose() * M;  // Gram matrix; top eigenvalue = sigma_max^2
    const Eigen::Index n = G.rows();
    const double scale = G.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;

    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    constexpr double kRelTol = 1e-10;
    constexpr int kMaxIter = 200000;
    int restart_axis = 0;
    for (int it = 0; it < kMaxIter; ++it) {
        Vector w = G * v;
        const double norm_w = w.norm();
        if (norm_w <= scale * 1e-300) {
            // start vector in the null space; deterministically restart
            v = Vector::Unit(n, restart_axis % n);
            ++restart_axis;
            continue;
        }
        const double next = v.dot(w);  // Rayleigh quotient
        v = w / norm_w;
        if (std::abs(next - lambda) <= kRelTol * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace mfgsim
