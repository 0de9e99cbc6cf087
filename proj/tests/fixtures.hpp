#pragma once

// Shared test fixtures.
//
// "ModelA": the canonical single-type scalar model A=0.5, B=1, Q=0.1, R=1.
// Its gains have closed forms used as oracles throughout:
//   K solves K^2 + 0.65 K - 0.1 = 0, Gamma = 1/(1+K), Pi = Gamma K A,
//   H = A - Pi, and the mean-field law fixed point is L* = A.

#include <cmath>
#include <string>

#include "mfgsim/model.hpp"
#include "mfgsim/solver.hpp"

namespace fixtures {

using mfgsim::AgentTypeParams;
using mfgsim::GameConfig;
using mfgsim::Matrix;
using mfgsim::Vector;

inline Matrix scalar(double v) {
    Matrix M(1, 1);
    M(0, 0) = v;
    return M;
}

inline Vector scalar_vec(double v) {
    Vector x(1);
    x[0] = v;
    return x;
}

struct ScalarOracle {
    double K, Gamma, Pi, H, zeta, Xi;
};

/// Closed-form scalar gains for B = R = 1. The Riccati equation reduces to
/// the quadratic K^2 + (1 - A^2 - Q) K - Q = 0; the rest follow directly.
inline ScalarOracle scalar_oracle(double A, double Q) {
    const double b = 1.0 - A * A - Q;
    const double K = (-b + std::sqrt(b * b + 4.0 * Q)) / 2.0;
    const double Gamma = 1.0 / (1.0 + K);
    const double Pi = Gamma * K * A;
    const double H = A - Pi;
    const double zeta = Q * Gamma / ((1.0 - H) * (1.0 - H));
    return {K, Gamma, Pi, H, zeta, H + zeta};
}

inline AgentTypeParams modela_type() {
    AgentTypeParams t;
    t.A = scalar(0.5);
    t.B = scalar(1.0);
    t.Q = scalar(0.1);
    t.R = scalar(1.0);
    t.nu0 = scalar_vec(1.0);
    return t;
}

/// Canonical ModelA game config (noise levels as documented in the repo
/// fixtures: sigma_x=0.25, sigma_w=0.01, sigma_v=0.04, S=1, alpha=2).
inline GameConfig modela_config() {
    GameConfig cfg;
    cfg.distribution.types = {modela_type()};
    cfg.distribution.mass = {1.0};
    cfg.noise.sigma_x = scalar(0.25);
    cfg.noise.sigma_w = scalar(0.01);
    cfg.noise.sigma_v = scalar(0.04);
    cfg.scheduler.S = scalar(1.0);
    cfg.scheduler.alpha = 2.0;
    cfg.N = 100;
    cfg.T = 500;
    cfg.seed = 1;
    cfg.runs = 10;
    return cfg;
}

inline std::string modela_json() {
    return R"({
  "types": [ {"n": 1, "m": 1, "A": [0.5], "B": [1.0], "Q": [0.1], "R": [1.0], "nu0": [1.0]} ],
  "mass": [1.0],
  "noise": {"sigma_x": [0.25], "sigma_w": [0.01], "sigma_v": [0.04]},
  "scheduler": {"S": [1.0], "alpha": 2.0},
  "sim": {"N": 100, "T": 500, "seed": 1, "runs": 10},
  "solver": {"tol": 1e-10, "max_iter": 100000}
})";
}

/// Contraction-violating variant: A=0.6 with Q=0.5 yields Xi ~ 1.123.
inline GameConfig failing_config() {
    GameConfig cfg = modela_config();
    cfg.distribution.types[0].A = scalar(0.6);
    cfg.distribution.types[0].Q = scalar(0.5);
    return cfg;
}

/// Noisier ModelA variant with enough innovation spread that the threshold
/// grid {0,2,4,6} actually bites; used for the cost-vs-alpha experiments.
inline GameConfig sweep_config() {
    GameConfig cfg = modela_config();
    cfg.noise.sigma_x = scalar(1.0);
    cfg.noise.sigma_w = scalar(1.0);
    cfg.noise.sigma_v = scalar(0.25);
    return cfg;
}

/// Noiseless oracle mode: all covariances zero, X0 = nu0 deterministic.
inline GameConfig noiseless_config(double nu0) {
    GameConfig cfg = modela_config();
    cfg.distribution.types[0].nu0 = scalar_vec(nu0);
    cfg.noise.sigma_x = scalar(0.0);
    cfg.noise.sigma_w = scalar(0.0);
    cfg.noise.sigma_v = scalar(0.0);
    cfg.scheduler.alpha = 0.0;
    cfg.N = 10;
    cfg.T = 200;
    cfg.options.allow_noiseless_channel = true;
    return cfg;
}

/// Two-type 2x2 fixture satisfying Assumptions 1 and 2 (max Xi ~ 0.78).
inline GameConfig two_type_config() {
    GameConfig cfg;
    AgentTypeParams t1;
    t1.A = (Matrix(2, 2) << 0.5, 0.1, 0.0, 0.4).finished();
    t1.B = Matrix::Identity(2, 2);
    t1.Q = 0.1 * Matrix::Identity(2, 2);
    t1.R = Matrix::Identity(2, 2);
    t1.nu0 = (Vector(2) << 1.0, -1.0).finished();
    AgentTypeParams t2;
    t2.A = (Matrix(2, 2) << 0.45, 0.0, 0.05, 0.5).finished();
    t2.B = Matrix::Identity(2, 2);
    t2.Q = (Matrix(2, 2) << 0.05, 0.0, 0.0, 0.1).finished();
    t2.R = Matrix::Identity(2, 2);
    t2.nu0 = (Vector(2) << 2.0, 0.5).finished();
    cfg.distribution.types = {t1, t2};
    cfg.distribution.mass = {0.6, 0.4};
    cfg.noise.sigma_x = 0.25 * Matrix::Identity(2, 2);
    cfg.noise.sigma_w = 0.01 * Matrix::Identity(2, 2);
    cfg.noise.sigma_v = 0.04 * Matrix::Identity(2, 2);
    cfg.scheduler.S = Matrix::Identity(2, 2);
    cfg.scheduler.alpha = 2.0;
    cfg.N = 50;
    cfg.T = 200;
    cfg.seed = 7;
    cfg.runs = 5;
    return cfg;
}

}  // namespace fixtures
