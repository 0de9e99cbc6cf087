#include "mfgsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mfgsim/io.hpp"
#include "mfgsim/parallel.hpp"

namespace mfgsim {

namespace {

struct AgentState {
    int type = 0;
    Vector X;
    Vector W_prev;
    Vector U;
    CommLink link;
    GaussianStream w_stream;
    GaussianStream v_stream;
    double cost_acc = 0.0;
    long tx_count = 0;
    double err_sq = 0.0;
    int gamma = 0;
    Vector Y;
    Vector err;

    AgentState(const AgentTypeParams& t, const SchedulerParams& sp, const NoiseModel& noise,
               DecoderInit init)
        : link(t, sp, noise, init) {}
};

void check_compatible(const GameConfig& cfg, const EquilibriumSolution& sol) {
    if (sol.gains.size() != cfg.distribution.types.size()) {
        throw ConfigError("dimension mismatch: solution has a different number of types "
                          "than the config");
    }
    if (sol.n() != cfg.n() || sol.gains.front().Gamma.rows() != cfg.m()) {
        std::ostringstream msg;
        msg << "dimension mismatch: solution solved for n=" << sol.n()
            << ", config has n=" << cfg.n();
        throw ConfigError(msg.str());
    }
}

}  // namespace

RunMetrics run_game(const GameConfig& cfg, const EquilibriumSolution& sol,
                    std::uint64_t seed, const PolicySpec& policy, const SimOptions& opts,
                    Trace* trace) {
    check_compatible(cfg, sol);
    const int N = cfg.N;
    const int T = cfg.T;
    const Eigen::Index n = cfg.n();
    const Eigen::Index m = cfg.m();
    const auto& dist = cfg.distribution;

    const TypeSample assignment = sample_types(N, dist, seed);

    // xbar to T (so g_{k+1} exists at k = T-1) and per-type feedforward
    const std::vector<Vector> xbar = mf_trajectory(sol, T);
    std::vector<std::vector<Vector>> g(dist.types.size());
    for (std::size_t t = 0; t < dist.types.size(); ++t) {
        g[t].resize(xbar.size());
        for (std::size_t k = 0; k < xbar.size(); ++k) g[t][k] = -sol.gains[t].Mtilde * xbar[k];
    }

    std::vector<AgentState> agents;
    agents.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        const int t = assignment.assignment[static_cast<std::size_t>(i)];
        const auto& tp = dist.types[static_cast<std::size_t>(t)];
        AgentState a(tp, cfg.scheduler, cfg.noise, cfg.options.decoder_init);
        a.type = t;
        a.link.set_tamper_scheduler(opts.tamper_scheduler);
        const auto uid = static_cast<std::uint64_t>(i);
        const GaussianStream x0_stream(stream_key(seed, uid, StreamKind::initial_state),
                                       cfg.noise.sigma_x);
        a.w_stream = GaussianStream(stream_key(seed, uid, StreamKind::process_noise),
                                    cfg.noise.sigma_w);
        a.v_stream = GaussianStream(stream_key(seed, uid, StreamKind::channel_noise),
                                    cfg.noise.sigma_v);
        a.X = tp.nu0 + x0_stream.vector_at(0);
        a.W_prev = Vector::Zero(n);
        a.U = Vector::Zero(m);
        agents.push_back(std::move(a));
    }

    if (trace) {
        trace->n = n;
        trace->m = m;
        trace->N = N;
        trace->T = T;
        trace->agent_types = assignment.assignment;
        trace->rows.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(T), {});
    }

    RunMetrics metrics;
    metrics.est_err_trace.resize(static_cast<std::size_t>(T));
    metrics.consensus_spread.resize(static_cast<std::size_t>(T));
    double eps_acc = 0.0;

    Vector mean_k(n);
    Vector var_k(n);
    for (int k = 0; k < T; ++k) {
        // empirical mean and spread over the current states, fixed agent order
        mean_k.setZero();
        for (const auto& a : agents) mean_k += a.X;
        mean_k /= static_cast<double>(N);
        var_k.setZero();
        for (const auto& a : agents) var_k += (a.X - mean_k).cwiseAbs2();
        var_k /= static_cast<double>(N);
        metrics.consensus_spread[static_cast<std::size_t>(k)] = std::sqrt(var_k.sum());
        eps_acc += (mean_k - xbar[static_cast<std::size_t>(k)]).squaredNorm();

        parallel_for(static_cast<std::size_t>(N), opts.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                AgentState& a = agents[i];
                const auto& tp = dist.types[static_cast<std::size_t>(a.type)];
                const TypeGains& tg = sol.gains[static_cast<std::size_t>(a.type)];

                const StepRecord& rec = a.link.step(a.X, a.W_prev, a.v_stream);

                const bool deviates = policy.kind != PolicyKind::equilibrium &&
                                      static_cast<int>(i) == policy.agent;
                if (!deviates) {
                    a.U = control_policy(tg, rec.Y, g[static_cast<std::size_t>(a.type)]
                                                     [static_cast<std::size_t>(k) + 1]);
                } else {
                    switch (policy.kind) {
                        case PolicyKind::zero_control:
                            a.U.setZero();
                            break;
                        case PolicyKind::scaled_gains:
                            a.U = -(policy.theta * tg.Pi) * rec.Y -
                                  tg.Gamma * g[static_cast<std::size_t>(a.type)]
                                             [static_cast<std::size_t>(k) + 1];
                            break;
                        case PolicyKind::mean_tracking:
                            // clairvoyant: track the realized empirical mean
                            a.U = -tg.Pi * rec.Y +
                                  tg.Gamma * (tg.Mtilde * (sol.Lstar * mean_k));
                            break;
                        case PolicyKind::equilibrium:
                            break;
                    }
                }
                a.link.note_control(a.U);

                const Vector dev = a.X - mean_k;
                a.cost_acc += dev.dot(tp.Q * dev) + a.U.dot(tp.R * a.U);
                a.err_sq = rec.err.squaredNorm();
                a.gamma = rec.gamma ? 1 : 0;
                a.tx_count += a.gamma;
                if (trace) {
                    TraceRow& row = trace->rows[static_cast<std::size_t>(k) *
                                                    static_cast<std::size_t>(N) + i];
                    row.k = k;
                    row.agent_id = static_cast<int>(i);
                    row.gamma = a.gamma;
                    row.x = a.X;
                    row.y = rec.Y;
                    row.u = a.U;
                    row.err = rec.err;
                    row.err_sq = a.err_sq;
                }

                const Vector W = a.w_stream.vector_at(static_cast<std::uint64_t>(k));
                a.X = tp.A * a.X + tp.B * a.U + W;
                a.W_prev = W;
            }
        });

        double err_sum = 0.0;
        for (const auto& a : agents) err_sum += a.err_sq;
        metrics.est_err_trace[static_cast<std::size_t>(k)] = err_sum / static_cast<double>(N);
    }

    metrics.agent_cost.resize(static_cast<std::size_t>(N));
    double cost_sum = 0.0;
    long tx_total = 0;
    for (int i = 0; i < N; ++i) {
        const double c = agents[static_cast<std::size_t>(i)].cost_acc / static_cast<double>(T);
        metrics.agent_cost[static_cast<std::size_t>(i)] = c;
        cost_sum += c;
        tx_total += agents[static_cast<std::size_t>(i)].tx_count;
    }
    metrics.avg_cost_per_agent = cost_sum / static_cast<double>(N);
    metrics.eps_TN = eps_acc / static_cast<double>(T);
    metrics.tx_rate = static_cast<double>(tx_total) /
                      (static_cast<double>(N) * static_cast<double>(T));
    return metrics;
}

double epsilon_metric(const Trace& trace, const std::vector<Vector>& xbar) {
    double acc = 0.0;
    Vector mean(trace.n);
    for (int k = 0; k < trace.T; ++k) {
        mean.setZero();
        for (int i = 0; i < trace.N; ++i) mean += trace.row(k, i).x;
        mean /= static_cast<double>(trace.N);
        acc += (mean - xbar.at(static_cast<std::size_t>(k))).squaredNorm();
    }
    return acc / static_cast<double>(trace.T);
}

double finite_cost(const Trace& trace, const GameConfig& cfg, int agent) {
    const auto& tp = cfg.distribution.types.at(
        static_cast<std::size_t>(trace.agent_types.at(static_cast<std::size_t>(agent))));
    double acc = 0.0;
    Vector mean(trace.n);
    for (int k = 0; k < trace.T; ++k) {
        mean.setZero();
        for (int i = 0; i < trace.N; ++i) mean += trace.row(k, i).x;
        mean /= static_cast<double>(trace.N);
        const TraceRow& row = trace.row(k, agent);
        const Vector dev = row.x - mean;
        acc += dev.dot(tp.Q * dev) + row.u.dot(tp.R * row.u);
    }
    return acc / static_cast<double>(trace.T);
}

std::vector<double> consensus_spread(const Trace& trace) {
    std::vector<double> out(static_cast<std::size_t>(trace.T));
    Vector mean(trace.n);
    Vector var(trace.n);
    for (int k = 0; k < trace.T; ++k) {
        mean.setZero();
        for (int i = 0; i < trace.N; ++i) mean += trace.row(k, i).x;
        mean /= static_cast<double>(trace.N);
        var.setZero();
        for (int i = 0; i < trace.N; ++i) var += (trace.row(k, i).x - mean).cwiseAbs2();
        var /= static_cast<double>(trace.N);
        out[static_cast<std::size_t>(k)] = std::sqrt(var.sum());
    }
    return out;
}

ProbeReport dual_effect_probe(const GameConfig& cfg, const EquilibriumSolution& sol,
                              std::uint64_t seed, const PolicySpec& alt_policy,
                              std::uint64_t alt_seed, const SimOptions& opts) {
    ProbeReport report;
    if (alt_seed != seed) {
        report.comparable = false;
        report.reason = "incomparable seeds: error traces under different noise cannot "
                        "be compared";
        report.pass = false;
        return report;
    }

    GameConfig single = cfg;
    single.N = 1;

    PolicySpec base;  // equilibrium
    PolicySpec alt = alt_policy;
    alt.agent = 0;

    Trace ta;
    Trace tb;
    SimOptions run_opts = opts;
    run_opts.threads = 1;
    run_game(single, sol, seed, base, run_opts, &ta);
    run_game(single, sol, seed, alt, run_opts, &tb);

    report.gamma_match = true;
    report.max_err_diff = 0.0;
    for (int k = 0; k < single.T; ++k) {
        const TraceRow& ra = ta.row(k, 0);
        const TraceRow& rb = tb.row(k, 0);
        if (ra.gamma != rb.gamma) report.gamma_match = false;
        const double diff = (ra.err - rb.err).cwiseAbs().maxCoeff();
        report.max_err_diff = std::max(report.max_err_diff, diff);
    }
    report.pass = report.gamma_match && report.max_err_diff == 0.0;
    return report;
}

ProbeReport dual_effect_probe(const GameConfig& cfg, const EquilibriumSolution& sol,
                              std::uint64_t seed, const PolicySpec& alt_policy,
                              const SimOptions& opts) {
    return dual_effect_probe(cfg, sol, seed, alt_policy, seed, opts);
}

std::vector<GapMember> default_deviation_family() {
    std::vector<GapMember> family;
    family.push_back({"equilibrium", PolicySpec{}, 0.0, 0.0});
    for (double theta : {0.5, 0.75, 1.25, 1.5}) {
        std::ostringstream name;
        name << "theta=" << theta;
        family.push_back({name.str(), PolicySpec{PolicyKind::scaled_gains, theta, 0}, 0.0, 0.0});
    }
    family.push_back({"mean_tracking", PolicySpec{PolicyKind::mean_tracking, 1.0, 0}, 0.0, 0.0});
    return family;
}

GapReport nash_gap(const GameConfig& cfg, const EquilibriumSolution& sol,
                   std::vector<GapMember> family, int runs, const SimOptions& opts) {
    const std::size_t jobs = family.size() * static_cast<std::size_t>(runs);
    std::vector<double> costs(jobs, 0.0);

    parallel_for(jobs, opts.threads, [&](std::size_t lo, std::size_t hi) {
        SimOptions run_opts = opts;
        run_opts.threads = 1;
        for (std::size_t j = lo; j < hi; ++j) {
            const std::size_t member = j / static_cast<std::size_t>(runs);
            const std::size_t run = j % static_cast<std::size_t>(runs);
            const std::uint64_t seed = cfg.seed + run;  // common random numbers
            const RunMetrics metrics =
                run_game(cfg, sol, seed, family[member].policy, run_opts);
            costs[j] = metrics.agent_cost[static_cast<std::size_t>(family[member].policy.agent)];
        }
    });

    GapReport report;
    report.runs = runs;
    for (std::size_t mi = 0; mi < family.size(); ++mi) {
        double mean = 0.0;
        for (int r = 0; r < runs; ++r) {
            mean += costs[mi * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)];
        }
        mean /= static_cast<double>(runs);
        double var = 0.0;
        for (int r = 0; r < runs; ++r) {
            const double d =
                costs[mi * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)] - mean;
            var += d * d;
        }
        var = runs > 1 ? var / static_cast<double>(runs - 1) : 0.0;
        family[mi].mean_cost = mean;
        family[mi].std_err = std::sqrt(var / static_cast<double>(runs));
    }

    const GapMember* eq = nullptr;
    const GapMember* best = nullptr;
    for (const auto& member : family) {
        if (member.policy.kind == PolicyKind::equilibrium && !eq) eq = &member;
        if (!best || member.mean_cost < best->mean_cost) best = &member;
    }
    if (!eq) throw ConfigError("nash_gap: deviation family must contain the equilibrium member");

    report.equilibrium_cost = eq->mean_cost;
    report.equilibrium_se = eq->std_err;
    report.gap = std::max(0.0, eq->mean_cost - best->mean_cost);
    report.gap_se = std::sqrt(eq->std_err * eq->std_err + best->std_err * best->std_err);
    report.members = std::move(family);
    return report;
}

// ---------------------------------------------------------------------------
// CSV

void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "k,agent_id,gamma";
    for (Eigen::Index j = 0; j < trace.n; ++j) os << ",x" << j;
    for (Eigen::Index j = 0; j < trace.n; ++j) os << ",y" << j;
    for (Eigen::Index j = 0; j < trace.m; ++j) os << ",u" << j;
    os << ",err_sq\n";
    for (const auto& row : trace.rows) {
        os << row.k << ',' << row.agent_id << ',' << row.gamma;
        for (Eigen::Index j = 0; j < trace.n; ++j) os << ',' << format_double(row.x[j]);
        for (Eigen::Index j = 0; j < trace.n; ++j) os << ',' << format_double(row.y[j]);
        for (Eigen::Index j = 0; j < trace.m; ++j) os << ',' << format_double(row.u[j]);
        os << ',' << format_double(row.err_sq) << '\n';
    }
}

void write_summary_header(std::ostream& os) {
    os << "run_id,N,T,alpha,seed,avg_cost,eps_TN,tx_rate\n";
}

void write_summary_row(std::ostream& os, const SummaryRow& row) {
    os << row.run_id << ',' << row.N << ',' << row.T << ',' << format_double(row.alpha) << ','
       << row.seed << ',' << format_double(row.avg_cost) << ',' << format_double(row.eps_TN)
       << ',' << format_double(row.tx_rate) << '\n';
}

}  // namespace mfgsim
