#pragma once

#include <string>
#include <vector>

#include "mfgsim/model.hpp"
#include "mfgsim/numeric.hpp"

namespace mfgsim {

/// Per-type equilibrium gains.
///   K      Riccati solution
///   Gamma  (R + B'KB)^{-1} B'
///   Pi     Gamma K A          (state feedback)
///   H      A - B Pi           (closed-loop matrix)
///   Mtilde solution of M = Q + H' M L*, so the feedforward is g_k = -Mtilde xbar_k
struct TypeGains {
    Matrix K;
    Matrix Gamma;
    Matrix Pi;
    Matrix H;
    Matrix Mtilde;
};

struct ContractionDiagnostics {
    double zeta = 0.0;
    std::vector<double> xi_per_type;
    bool pass = false;

    double max_xi() const;
};

/// Full mean-field equilibrium: per-type gains, the linear mean-field law
/// xbar_{k+1} = Lstar xbar_k, and its initial condition.
struct EquilibriumSolution {
    std::vector<TypeGains> gains;
    Matrix Lstar;
    Vector xbar0;
    ContractionDiagnostics diagnostics;
    SolveReport law_report;
    std::string config_fingerprint;  // ties a cached solution to its config

    Eigen::Index n() const { return Lstar.rows(); }
};

/// Riccati gains for one type (Mtilde left empty; it depends on Lstar).
TypeGains compute_gains(const AgentTypeParams& t, double tol, int max_iter);

ContractionDiagnostics contraction_diagnostics(const std::vector<TypeGains>& gains,
                                               const TypeDistribution& d);

/// One application of the mean-field law operator:
///   L -> sum_phi [H + B Gamma M_L L] P(phi),  M_L = solve_stein(H', Q, L).
Matrix tbar_apply(const Matrix& L, const std::vector<TypeGains>& gains,
                  const TypeDistribution& d, double tol, int max_iter);

/// Fixed-point iteration for the equilibrium law Lstar, started from the
/// mass-weighted closed-loop matrix. Refuses (AssumptionError) when the
/// contraction diagnostics fail, unless force is set.
Matrix solve_mf_law(const std::vector<TypeGains>& gains, const TypeDistribution& d,
                    const ContractionDiagnostics& diag, double tol, int max_iter,
                    SolveReport* report = nullptr, bool force = false);

/// End-to-end solve: structural checks, gains, diagnostics, law, feedforward.
EquilibriumSolution solve_equilibrium(const GameConfig& cfg, bool force = false);

/// Equilibrium mean-field trajectory xbar_0..T (inclusive).
std::vector<Vector> mf_trajectory(const EquilibriumSolution& sol, int T);

/// Feedforward sequence g_0..T for one type: g_k = -Mtilde xbar_k.
std::vector<Vector> feedforward(const EquilibriumSolution& sol, int type_index, int T);

/// U = -Pi Y - Gamma g_next.
Vector control_policy(const TypeGains& g, const Vector& Y, const Vector& g_next);

/// Canonical serialization, same conventions as the config format.
std::string serialize_solution(const EquilibriumSolution& sol);
EquilibriumSolution load_solution(const std::string& text);

/// Fingerprint of the solver-relevant part of a config (types, mass, solver).
std::string config_fingerprint(const GameConfig& cfg);

}  // namespace mfgsim
