#include "mfgsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "json_canon.hpp"
#include "mfgsim/io.hpp"

namespace mfgsim {

using nlohmann::json;

double ContractionDiagnostics::max_xi() const {
    double mx = 0.0;
    for (double x : xi_per_type) mx = std::max(mx, x);
    return mx;
}

TypeGains compute_gains(const AgentTypeParams& t, double tol, int max_iter) {
    TypeGains g;
    g.K = solve_dare(t.A, t.B, t.Q, t.R, tol, max_iter);
    const Matrix S = t.R + t.B.transpose() * g.K * t.B;
    g.Gamma = S.llt().solve(t.B.transpose());
    g.Pi = g.Gamma * g.K * t.A;
    g.H = t.A - t.B * g.Pi;
    return g;
}

ContractionDiagnostics contraction_diagnostics(const std::vector<TypeGains>& gains,
                                               const TypeDistribution& d) {
    ContractionDiagnostics out;
    std::vector<double> h_norms(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        h_norms[i] = spectral_norm(gains[i].H);
        const double q_norm = spectral_norm(d.types[i].Q);
        const double bg_norm = spectral_norm(d.types[i].B * gains[i].Gamma);
        out.zeta += q_norm * bg_norm / ((1.0 - h_norms[i]) * (1.0 - h_norms[i])) * d.mass[i];
    }
    out.xi_per_type.resize(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        out.xi_per_type[i] = h_norms[i] + out.zeta;
    }
    out.pass = out.max_xi() < 1.0;
    return out;
}

namespace {

double stein_tol(double law_tol) { return std::max(1e-14, 0.01 * law_tol); }

}  // namespace

Matrix tbar_apply(const Matrix& L, const std::vector<TypeGains>& gains,
                  const TypeDistribution& d, double tol, int max_iter) {
    const Eigen::Index n = L.rows();
    Matrix out = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < gains.size(); ++i) {
        const Matrix M = solve_stein(gains[i].H.transpose(), d.types[i].Q, L,
                                     stein_tol(tol), max_iter);
        out += d.mass[i] * (gains[i].H + d.types[i].B * gains[i].Gamma * M * L);
    }
    return out;
}

Matrix solve_mf_law(const std::vector<TypeGains>& gains, const TypeDistribution& d,
                    const ContractionDiagnostics& diag, double tol, int max_iter,
                    SolveReport* report, bool force) {
    if (!diag.pass && !force) {
        std::ostringstream msg;
        msg << "Assumption 2 violated (Xi = " << diag.max_xi()
            << " >= 1): the mean-field fixed point is not guaranteed; pass --force to iterate anyway";
        throw AssumptionError(msg.str());
    }

    const Eigen::Index n = gains.front().H.rows();
    Matrix L = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < gains.size(); ++i) L += d.mass[i] * gains[i].H;

    double residual = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const Matrix next = tbar_apply(L, gains, d, tol, max_iter);
        residual = (next - L).norm();
        L = next;
        if (residual <= tol) {
            if (report) *report = {it, residual, true};
            const double norm = spectral_norm(L);
            if (norm > 1.0 + 1e-9) {
                throw SolverError("mean-field law iteration left the unit ball", norm - 1.0);
            }
            return L;
        }
    }
    if (report) *report = {max_iter, residual, false};
    std::ostringstream msg;
    msg << "mean-field law iteration did not converge in " << max_iter
        << " iterations (last residual " << residual << ")";
    throw SolverError(msg.str(), residual);
}

EquilibriumSolution solve_equilibrium(const GameConfig& cfg, bool force) {
    const auto& dist = cfg.distribution;
    for (std::size_t i = 0; i < dist.types.size(); ++i) {
        const StructuralDiagnostics sd = check_structural_assumptions(dist.types[i]);
        if (!sd.controllable()) {
            std::ostringstream msg;
            msg << "Assumption 1 violated for types[" << i << "]: (A,B) is not controllable"
                << " (controllability rank " << sd.controllability_rank << " of " << sd.n << ")";
            throw AssumptionError(msg.str());
        }
        if (!sd.observable()) {
            std::ostringstream msg;
            msg << "Assumption 1 violated for types[" << i << "]: (A,Q^(1/2)) is not observable"
                << " (observability rank " << sd.observability_rank << " of " << sd.n << ")";
            throw AssumptionError(msg.str());
        }
    }

    EquilibriumSolution sol;
    sol.gains.reserve(dist.types.size());
    for (const auto& t : dist.types) {
        sol.gains.push_back(compute_gains(t, cfg.solver_tol, cfg.solver_max_iter));
    }
    sol.diagnostics = contraction_diagnostics(sol.gains, dist);
    sol.Lstar = solve_mf_law(sol.gains, dist, sol.diagnostics, cfg.solver_tol,
                             cfg.solver_max_iter, &sol.law_report, force);
    for (std::size_t i = 0; i < sol.gains.size(); ++i) {
        sol.gains[i].Mtilde = solve_stein(sol.gains[i].H.transpose(), dist.types[i].Q,
                                          sol.Lstar, stein_tol(cfg.solver_tol),
                                          cfg.solver_max_iter);
    }
    sol.xbar0 = Vector::Zero(cfg.n());
    for (std::size_t i = 0; i < dist.types.size(); ++i) {
        sol.xbar0 += dist.mass[i] * dist.types[i].nu0;
    }
    sol.config_fingerprint = config_fingerprint(cfg);
    return sol;
}

std::vector<Vector> mf_trajectory(const EquilibriumSolution& sol, int T) {
    std::vector<Vector> xbar(static_cast<std::size_t>(T) + 1);
    xbar[0] = sol.xbar0;
    for (int k = 0; k < T; ++k) {
        xbar[static_cast<std::size_t>(k) + 1] = sol.Lstar * xbar[static_cast<std::size_t>(k)];
    }
    return xbar;
}

std::vector<Vector> feedforward(const EquilibriumSolution& sol, int type_index, int T) {
    const auto xbar = mf_trajectory(sol, T);
    const Matrix& Mt = sol.gains.at(static_cast<std::size_t>(type_index)).Mtilde;
    std::vector<Vector> g(xbar.size());
    for (std::size_t k = 0; k < xbar.size(); ++k) g[k] = -Mt * xbar[k];
    return g;
}

Vector control_policy(const TypeGains& g, const Vector& Y, const Vector& g_next) {
    return -g.Pi * Y - g.Gamma * g_next;
}

// ---------------------------------------------------------------------------
// serialization

using detail::canonical_dump;
using detail::matrix_from_json;
using detail::matrix_to_json;

std::string serialize_solution(const EquilibriumSolution& sol) {
    const Eigen::Index n = sol.n();
    json root;
    root["n"] = static_cast<long long>(n);
    root["m"] = static_cast<long long>(sol.gains.front().Gamma.rows());
    root["fingerprint"] = sol.config_fingerprint;
    root["Lstar"] = matrix_to_json(sol.Lstar);
    root["xbar0"] = matrix_to_json(sol.xbar0);
    json gains = json::array();
    for (const auto& g : sol.gains) {
        json jg;
        jg["K"] = matrix_to_json(g.K);
        jg["Gamma"] = matrix_to_json(g.Gamma);
        jg["Pi"] = matrix_to_json(g.Pi);
        jg["H"] = matrix_to_json(g.H);
        jg["Mtilde"] = matrix_to_json(g.Mtilde);
        gains.push_back(jg);
    }
    root["gains"] = gains;
    root["diagnostics"]["zeta"] = sol.diagnostics.zeta;
    root["diagnostics"]["xi_per_type"] = sol.diagnostics.xi_per_type;
    root["diagnostics"]["pass"] = sol.diagnostics.pass;
    return canonical_dump(root);
}

EquilibriumSolution load_solution(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("solution parse error: ") + e.what());
    }
    EquilibriumSolution sol;
    const auto n = static_cast<Eigen::Index>(root.at("n").get<long long>());
    const auto m = static_cast<Eigen::Index>(root.at("m").get<long long>());
    sol.config_fingerprint = root.at("fingerprint").get<std::string>();
    sol.Lstar = matrix_from_json(root.at("Lstar"), n, n);
    sol.xbar0 = matrix_from_json(root.at("xbar0"), n, 1).col(0);
    for (const auto& jg : root.at("gains")) {
        TypeGains g;
        g.K = matrix_from_json(jg.at("K"), n, n);
        g.Gamma = matrix_from_json(jg.at("Gamma"), m, n);
        g.Pi = matrix_from_json(jg.at("Pi"), m, n);
        g.H = matrix_from_json(jg.at("H"), n, n);
        g.Mtilde = matrix_from_json(jg.at("Mtilde"), n, n);
        sol.gains.push_back(std::move(g));
    }
    const json& diag = root.at("diagnostics");
    sol.diagnostics.zeta = diag.at("zeta").get<double>();
    sol.diagnostics.xi_per_type = diag.at("xi_per_type").get<std::vector<double>>();
    sol.diagnostics.pass = diag.at("pass").get<bool>();
    return sol;
}

std::string config_fingerprint(const GameConfig& cfg) {
    json root;
    json types = json::array();
    for (const auto& t : cfg.distribution.types) {
        json jt;
        jt["A"] = matrix_to_json(t.A);
        jt["B"] = matrix_to_json(t.B);
        jt["Q"] = matrix_to_json(t.Q);
        jt["R"] = matrix_to_json(t.R);
        jt["nu0"] = matrix_to_json(t.nu0);
        types.push_back(jt);
    }
    root["types"] = types;
    root["mass"] = cfg.distribution.mass;
    root["solver"]["tol"] = cfg.solver_tol;
    root["solver"]["max_iter"] = static_cast<long long>(cfg.solver_max_iter);
    const std::string text = canonical_dump(root);

    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mfgsim
