#include "mfgsim/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_canon.hpp"
#include "mfgsim/io.hpp"
#include "mfgsim/rng.hpp"

namespace mfgsim {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// schema helpers

[[noreturn]] void schema_error(const std::string& what) {
    throw ConfigError("schema error: " + what);
}

const json& require_key(const json& obj, const std::string& key, const std::string& ctx) {
    if (!obj.contains(key)) schema_error("missing key '" + ctx + key + "'");
    return obj.at(key);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) schema_error("unknown key '" + ctx + item.key() + "'");
    }
}

double as_number(const json& j, const std::string& ctx) {
    if (!j.is_number()) schema_error("key '" + ctx + "' must be a number");
    return j.get<double>();
}

long long as_integer(const json& j, const std::string& ctx) {
    if (!j.is_number_integer()) schema_error("key '" + ctx + "' must be an integer");
    return j.get<long long>();
}

Matrix as_matrix(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& ctx) {
    if (!j.is_array()) schema_error("key '" + ctx + "' must be a numeric array");
    if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
        std::ostringstream msg;
        msg << "dimension mismatch: " << ctx << " has " << j.size() << " entries, expected "
            << rows * cols << " (" << rows << "x" << cols << ")";
        throw ConfigError(msg.str());
    }
    Matrix M(rows, cols);
    Eigen::Index idx = 0;
    for (const auto& v : j) {
        if (!v.is_number()) schema_error("key '" + ctx + "' must contain only numbers");
        M(idx / cols, idx % cols) = v.get<double>();
        ++idx;
    }
    return M;
}

Vector as_vector(const json& j, Eigen::Index rows, const std::string& ctx) {
    return as_matrix(j, rows, 1, ctx).col(0);
}

// ---------------------------------------------------------------------------
// matrix property checks

bool is_symmetric(const Matrix& M) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double min_eigenvalue(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double psd_slack(const Matrix& M) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    return -1e-12 * scale;
}

void check_covariance(const Matrix& M, bool allow_psd, const std::string& name) {
    if (!is_symmetric(M)) throw ConfigError(name + " must be symmetric");
    const double lmin = min_eigenvalue(M);
    if (allow_psd) {
        if (lmin < psd_slack(M)) {
            throw ConfigError("covariance must be positive semidefinite: " + name);
        }
    } else if (lmin <= 0.0) {
        throw ConfigError("covariance must be positive definite: " + name +
                          " (set options.allow_noiseless_channel for noiseless oracle runs)");
    }
}

}  // namespace

GameConfig load_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) schema_error("top-level document must be an object");
    reject_unknown_keys(root, {"types", "mass", "noise", "scheduler", "sim", "solver", "options"},
                        "");

    GameConfig cfg;

    // options first: the covariance checks depend on the noiseless escape hatch
    if (root.contains("options")) {
        const json& opt = root.at("options");
        reject_unknown_keys(opt, {"allow_noiseless_channel", "decoder_init"}, "options.");
        if (opt.contains("allow_noiseless_channel")) {
            if (!opt.at("allow_noiseless_channel").is_boolean())
                schema_error("key 'options.allow_noiseless_channel' must be a boolean");
            cfg.options.allow_noiseless_channel = opt.at("allow_noiseless_channel").get<bool>();
        }
        if (opt.contains("decoder_init")) {
            const std::string v = opt.at("decoder_init").is_string()
                                      ? opt.at("decoder_init").get<std::string>()
                                      : std::string();
            if (v == "prior_mean") {
                cfg.options.decoder_init = DecoderInit::prior_mean;
            } else if (v == "zero") {
                cfg.options.decoder_init = DecoderInit::zero;
            } else {
                schema_error("key 'options.decoder_init' must be \"prior_mean\" or \"zero\"");
            }
        }
    }

    const json& types = require_key(root, "types", "");
    if (!types.is_array() || types.empty()) {
        throw ConfigError("at least one type is required");
    }
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
        const std::string ctx = "types[" + std::to_string(i) + "].";
        const json& t = types.at(i);
        if (!t.is_object()) schema_error("'types' entries must be objects");
        reject_unknown_keys(t, {"n", "m", "A", "B", "Q", "R", "nu0"}, ctx);
        const auto tn = static_cast<Eigen::Index>(as_integer(require_key(t, "n", ctx), ctx + "n"));
        const auto tm = static_cast<Eigen::Index>(as_integer(require_key(t, "m", ctx), ctx + "m"));
        if (tn < 1 || tm < 1) throw ConfigError(ctx + "n and " + ctx + "m must be >= 1");
        if (i == 0) {
            n = tn;
            m = tm;
        } else if (tn != n || tm != m) {
            std::ostringstream msg;
            msg << "dimension mismatch: types[" << i << "] has n=" << tn << ", m=" << tm
                << ", expected n=" << n << ", m=" << m;
            throw ConfigError(msg.str());
        }
        AgentTypeParams p;
        p.A = as_matrix(require_key(t, "A", ctx), tn, tn, ctx + "A");
        p.B = as_matrix(require_key(t, "B", ctx), tn, tm, ctx + "B");
        p.Q = as_matrix(require_key(t, "Q", ctx), tn, tn, ctx + "Q");
        p.R = as_matrix(require_key(t, "R", ctx), tm, tm, ctx + "R");
        p.nu0 = as_vector(require_key(t, "nu0", ctx), tn, ctx + "nu0");
        if (!is_symmetric(p.Q)) throw ConfigError(ctx + "Q must be symmetric");
        if (min_eigenvalue(p.Q) < psd_slack(p.Q)) {
            throw ConfigError(ctx + "Q must be positive semidefinite");
        }
        if (!is_symmetric(p.R) || min_eigenvalue(p.R) <= 0.0) {
            throw ConfigError(ctx + "R must be symmetric positive definite");
        }
        cfg.distribution.types.push_back(std::move(p));
    }

    const json& mass = require_key(root, "mass", "");
    if (!mass.is_array()) schema_error("key 'mass' must be an array");
    if (mass.size() != types.size()) {
        std::ostringstream msg;
        msg << "dimension mismatch: mass has " << mass.size() << " entries, expected "
            << types.size();
        throw ConfigError(msg.str());
    }
    double total = 0.0;
    for (const auto& v : mass) {
        const double p = as_number(v, "mass[]");
        if (p < 0.0 || p > 1.0) throw ConfigError("mass values must lie in [0,1]");
        cfg.distribution.mass.push_back(p);
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "masses must sum to 1 (got " << total << ")";
        throw ConfigError(msg.str());
    }

    const json& noise = require_key(root, "noise", "");
    reject_unknown_keys(noise, {"sigma_x", "sigma_w", "sigma_v"}, "noise.");
    cfg.noise.sigma_x = as_matrix(require_key(noise, "sigma_x", "noise."), n, n, "noise.sigma_x");
    cfg.noise.sigma_w = as_matrix(require_key(noise, "sigma_w", "noise."), n, n, "noise.sigma_w");
    cfg.noise.sigma_v = as_matrix(require_key(noise, "sigma_v", "noise."), n, n, "noise.sigma_v");
    const bool psd_ok = cfg.options.allow_noiseless_channel;
    check_covariance(cfg.noise.sigma_x, psd_ok, "noise.sigma_x");
    check_covariance(cfg.noise.sigma_w, psd_ok, "noise.sigma_w");
    check_covariance(cfg.noise.sigma_v, psd_ok, "noise.sigma_v");

    const json& sched = require_key(root, "scheduler", "");
    reject_unknown_keys(sched, {"S", "alpha"}, "scheduler.");
    cfg.scheduler.S = as_matrix(require_key(sched, "S", "scheduler."), n, n, "scheduler.S");
    if (!is_symmetric(cfg.scheduler.S) || min_eigenvalue(cfg.scheduler.S) <= 0.0) {
        throw ConfigError("scheduler.S must be symmetric positive definite");
    }
    cfg.scheduler.alpha = as_number(require_key(sched, "alpha", "scheduler."), "scheduler.alpha");
    if (cfg.scheduler.alpha < 0.0) throw ConfigError("scheduler.alpha must be >= 0");

    const json& sim = require_key(root, "sim", "");
    reject_unknown_keys(sim, {"N", "T", "seed", "runs"}, "sim.");
    const long long N = as_integer(require_key(sim, "N", "sim."), "sim.N");
    const long long T = as_integer(require_key(sim, "T", "sim."), "sim.T");
    const long long runs = as_integer(require_key(sim, "runs", "sim."), "sim.runs");
    if (N < 1) throw ConfigError("sim.N must be >= 1");
    if (T < 1) throw ConfigError("sim.T must be >= 1");
    if (runs < 1) throw ConfigError("sim.runs must be >= 1");
    cfg.N = static_cast<int>(N);
    cfg.T = static_cast<int>(T);
    cfg.runs = static_cast<int>(runs);
    cfg.seed = require_key(sim, "seed", "sim.").get<std::uint64_t>();

    const json& solver = require_key(root, "solver", "");
    reject_unknown_keys(solver, {"tol", "max_iter"}, "solver.");
    cfg.solver_tol = as_number(require_key(solver, "tol", "solver."), "solver.tol");
    if (!(cfg.solver_tol > 0.0)) throw ConfigError("solver.tol must be > 0");
    const long long max_iter = as_integer(require_key(solver, "max_iter", "solver."), "solver.max_iter");
    if (max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
    cfg.solver_max_iter = static_cast<int>(max_iter);

    return cfg;
}

GameConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

std::string serialize_config(const GameConfig& cfg) {
    using detail::matrix_to_json;
    json root;
    json types = json::array();
    for (const auto& t : cfg.distribution.types) {
        json jt;
        jt["n"] = static_cast<long long>(t.n());
        jt["m"] = static_cast<long long>(t.m());
        jt["A"] = matrix_to_json(t.A);
        jt["B"] = matrix_to_json(t.B);
        jt["Q"] = matrix_to_json(t.Q);
        jt["R"] = matrix_to_json(t.R);
        jt["nu0"] = matrix_to_json(t.nu0);
        types.push_back(jt);
    }
    root["types"] = types;
    root["mass"] = cfg.distribution.mass;
    root["noise"]["sigma_x"] = matrix_to_json(cfg.noise.sigma_x);
    root["noise"]["sigma_w"] = matrix_to_json(cfg.noise.sigma_w);
    root["noise"]["sigma_v"] = matrix_to_json(cfg.noise.sigma_v);
    root["scheduler"]["S"] = matrix_to_json(cfg.scheduler.S);
    root["scheduler"]["alpha"] = cfg.scheduler.alpha;
    root["sim"]["N"] = static_cast<long long>(cfg.N);
    root["sim"]["T"] = static_cast<long long>(cfg.T);
    root["sim"]["seed"] = cfg.seed;
    root["sim"]["runs"] = static_cast<long long>(cfg.runs);
    root["solver"]["tol"] = cfg.solver_tol;
    root["solver"]["max_iter"] = static_cast<long long>(cfg.solver_max_iter);
    root["options"]["allow_noiseless_channel"] = cfg.options.allow_noiseless_channel;
    root["options"]["decoder_init"] =
        cfg.options.decoder_init == DecoderInit::prior_mean ? "prior_mean" : "zero";

    return detail::canonical_dump(root);
}

StructuralDiagnostics check_structural_assumptions(const AgentTypeParams& t) {
    const Eigen::Index n = t.n();
    const Eigen::Index m = t.m();

    Matrix ctrb(n, n * m);
    Matrix Apow = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ctrb.middleCols(i * m, m) = Apow * t.B;
        Apow = t.A * Apow;
    }

    // observability of (A, Q^{1/2}) with the symmetric PSD square root
    Eigen::SelfAdjointEigenSolver<Matrix> es(t.Q);
    const Matrix C = es.eigenvectors() *
                     es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                     es.eigenvectors().transpose();
    Matrix obsv(n * n, n);
    Apow = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        obsv.middleRows(i * n, n) = C * Apow;
        Apow = Apow * t.A;
    }

    const auto rank_of = [](const Matrix& M) {
        Eigen::FullPivLU<Matrix> lu(M);
        lu.setThreshold(1e-10);
        return lu.rank();
    };
    return StructuralDiagnostics{n, rank_of(ctrb), rank_of(obsv)};
}

TypeSample sample_types(int N, const TypeDistribution& d, std::uint64_t seed) {
    const std::uint64_t key = stream_key(seed, 0, StreamKind::type_assignment);
    const std::size_t k = d.types.size();

    std::vector<double> cdf(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += d.mass[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    TypeSample out;
    out.assignment.resize(static_cast<std::size_t>(N));
    out.empirical.assign(k, 0.0);
    for (int i = 0; i < N; ++i) {
        const double u = uniform01(key, static_cast<std::uint64_t>(i));
        std::size_t idx = 0;
        while (idx + 1 < k && u >= cdf[idx]) ++idx;
        out.assignment[static_cast<std::size_t>(i)] = static_cast<int>(idx);
        out.empirical[idx] += 1.0;
    }
    for (auto& p : out.empirical) p /= static_cast<double>(N);
    return out;
}

}  // namespace mfgsim
