#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfgsim/comm.hpp"
#include "mfgsim/solver.hpp"

namespace mfgsim {

enum class PolicyKind { equilibrium, zero_control, scaled_gains, mean_tracking };

/// Non-equilibrium kinds apply to agent `agent`; everyone else runs the
/// equilibrium policy.
struct PolicySpec {
    PolicyKind kind = PolicyKind::equilibrium;
    double theta = 1.0;  // feedback-gain scale for scaled_gains
    int agent = 0;
};

struct SimOptions {
    int threads = 1;
    bool tamper_scheduler = false;  // test-only negative control, see CommLink
};

struct TraceRow {
    int k = 0;
    int agent_id = 0;
    int gamma = 0;
    Vector x;
    Vector y;
    Vector u;
    Vector err;
    double err_sq = 0.0;
};

/// Full per-step record of a run, ordered by (k, agent_id).
struct Trace {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    int N = 0;
    int T = 0;
    std::vector<int> agent_types;
    std::vector<TraceRow> rows;

    const TraceRow& row(int k, int agent) const {
        return rows[static_cast<std::size_t>(k) * static_cast<std::size_t>(N) +
                    static_cast<std::size_t>(agent)];
    }
};

struct RunMetrics {
    double avg_cost_per_agent = 0.0;
    double eps_TN = 0.0;
    double tx_rate = 0.0;
    std::vector<double> est_err_trace;     // mean over agents of ||err_k||^2
    std::vector<double> consensus_spread;  // cross-agent std of states per k
    std::vector<double> agent_cost;        // finite-T cost per agent
};

/// Simulates one finite-N game for T steps under the given policy.
/// Deterministic in (cfg, sol, seed, policy) regardless of thread count.
RunMetrics run_game(const GameConfig& cfg, const EquilibriumSolution& sol,
                    std::uint64_t seed, const PolicySpec& policy,
                    const SimOptions& opts = {}, Trace* trace = nullptr);

/// (1/T) sum_k ||empirical mean_k - xbar_k||^2, recomputed from a trace.
double epsilon_metric(const Trace& trace, const std::vector<Vector>& xbar);

/// Finite-T average cost of one agent, recomputed from a trace.
double finite_cost(const Trace& trace, const GameConfig& cfg, int agent);

/// Per-k cross-agent standard deviation (2-norm of the componentwise std).
std::vector<double> consensus_spread(const Trace& trace);

struct ProbeReport {
    bool comparable = true;
    std::string reason;
    double max_err_diff = 0.0;
    bool gamma_match = false;
    bool pass = false;
};

/// Runs two single-agent simulations with identical noise streams under two
/// policies and requires the error and transmission traces to match exactly.
/// Reports incomparable seeds instead of comparing unlike noise.
ProbeReport dual_effect_probe(const GameConfig& cfg, const EquilibriumSolution& sol,
                              std::uint64_t seed, const PolicySpec& alt_policy,
                              std::uint64_t alt_seed, const SimOptions& opts = {});
ProbeReport dual_effect_probe(const GameConfig& cfg, const EquilibriumSolution& sol,
                              std::uint64_t seed, const PolicySpec& alt_policy,
                              const SimOptions& opts = {});

struct GapMember {
    std::string name;
    PolicySpec policy;
    double mean_cost = 0.0;
    double std_err = 0.0;
};

struct GapReport {
    std::vector<GapMember> members;
    double equilibrium_cost = 0.0;
    double equilibrium_se = 0.0;
    double gap = 0.0;     // max(0, J_eq - min over members); lower bound on the true gap
    double gap_se = 0.0;
    int runs = 0;
};

/// The documented deviation family: scaled feedback gains plus a clairvoyant
/// policy that tracks the realized empirical mean instead of xbar.
std::vector<GapMember> default_deviation_family();

/// Estimates agent 0's best improvement over the equilibrium policy within
/// a finite deviation family, others fixed at equilibrium. `runs` seeds per
/// member, common random numbers across members.
GapReport nash_gap(const GameConfig& cfg, const EquilibriumSolution& sol,
                   std::vector<GapMember> family, int runs, const SimOptions& opts = {});

// --- CSV emission (17-significant-digit floats) ----------------------------

struct SummaryRow {
    int run_id = 0;
    int N = 0;
    int T = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    double avg_cost = 0.0;
    double eps_TN = 0.0;
    double tx_rate = 0.0;
};

void write_trace_csv(std::ostream& os, const Trace& trace);
void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const SummaryRow& row);

}  // namespace mfgsim
