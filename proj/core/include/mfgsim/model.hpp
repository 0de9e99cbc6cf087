#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfgsim/common.hpp"

namespace mfgsim {

/// One agent type: dynamics (A, B), cost weights (Q, R) and initial-state mean.
struct AgentTypeParams {
    Matrix A;    // n x n
    Matrix B;    // n x m
    Matrix Q;    // n x n, symmetric PSD
    Matrix R;    // m x m, symmetric PD
    Vector nu0;  // n, initial-state mean

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }
};

struct TypeDistribution {
    std::vector<AgentTypeParams> types;
    std::vector<double> mass;  // probabilities, sum to 1
};

struct NoiseModel {
    Matrix sigma_x;  // initial-state covariance
    Matrix sigma_w;  // process noise covariance
    Matrix sigma_v;  // channel noise covariance
};

struct SchedulerParams {
    Matrix S;     // symmetric PD weight
    double alpha = 0.0;  // threshold, >= 0
};

enum class DecoderInit { prior_mean, zero };

struct ConfigOptions {
    bool allow_noiseless_channel = false;  // permits PSD (incl. zero) covariances
    DecoderInit decoder_init = DecoderInit::prior_mean;
};

struct GameConfig {
    TypeDistribution distribution;
    NoiseModel noise;
    SchedulerParams scheduler;
    int N = 1;
    int T = 1;
    std::uint64_t seed = 0;
    int runs = 1;
    double solver_tol = 1e-10;
    int solver_max_iter = 100000;
    ConfigOptions options;

    Eigen::Index n() const { return distribution.types.at(0).n(); }
    Eigen::Index m() const { return distribution.types.at(0).m(); }
};

/// Controllability / observability rank diagnostics for one type.
struct StructuralDiagnostics {
    Eigen::Index n = 0;
    Eigen::Index controllability_rank = 0;
    Eigen::Index observability_rank = 0;

    bool controllable() const { return controllability_rank == n; }
    bool observable() const { return observability_rank == n; }
    bool pass() const { return controllable() && observable(); }
};

struct TypeSample {
    std::vector<int> assignment;     // length N, type index per agent
    std::vector<double> empirical;   // P_N per type
};

/// Parses and fully validates a JSON config document.
/// Throws ConfigError on schema or invariant violations.
GameConfig load_config(const std::string& text);
GameConfig load_config_file(const std::string& path);

/// Canonical serialization: sorted keys, 17-significant-digit floats.
/// serialize(load(serialize(cfg))) == serialize(cfg) byte for byte.
std::string serialize_config(const GameConfig& cfg);

/// Rank tests for (A,B) controllability and (A, Q^{1/2}) observability.
StructuralDiagnostics check_structural_assumptions(const AgentTypeParams& t);

/// Assigns a type to each of N agents i.i.d. from the distribution.
/// Deterministic given the seed; draw i depends only on (seed, i).
TypeSample sample_types(int N, const TypeDistribution& d, std::uint64_t seed);

}  // namespace mfgsim
