// mfgsim: mean-field game equilibrium solver and finite-N game simulator
// for linear-quadratic agents behind threshold-scheduled AWGN links.
//
// Subcommands: check, solve, simulate, sweep-alpha, nash-gap, probe-dual-effect.
// Exit codes: 0 ok, 2 config error, 3 assumption violation, 4 solver
// non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfgsim/io.hpp"
#include "mfgsim/model.hpp"
#include "mfgsim/parallel.hpp"
#include "mfgsim/sim.hpp"
#include "mfgsim/solver.hpp"

namespace fs = std::filesystem;
using namespace mfgsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitSolver = 4;

struct Cli {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> agents;
    std::optional<int> horizon;
    std::optional<double> alpha;
    std::string alphas_csv;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::string decoder_init;
    bool force = false;
    bool trace = false;
    bool tamper_scheduler = false;
};

GameConfig load_with_overrides(const Cli& cli) {
    GameConfig cfg = load_config_file(cli.config_path);
    if (cli.agents) cfg.N = *cli.agents;
    if (cli.horizon) cfg.T = *cli.horizon;
    if (cli.alpha) cfg.scheduler.alpha = *cli.alpha;
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.runs) cfg.runs = *cli.runs;
    if (!cli.decoder_init.empty()) {
        if (cli.decoder_init == "prior_mean") {
            cfg.options.decoder_init = DecoderInit::prior_mean;
        } else if (cli.decoder_init == "zero") {
            cfg.options.decoder_init = DecoderInit::zero;
        } else {
            throw ConfigError("--decoder-init must be prior_mean or zero");
        }
    }
    if (cfg.N < 1) throw ConfigError("sim.N must be >= 1");
    if (cfg.T < 1) throw ConfigError("sim.T must be >= 1");
    if (cfg.runs < 1) throw ConfigError("sim.runs must be >= 1");
    if (cfg.scheduler.alpha < 0.0) throw ConfigError("scheduler.alpha must be >= 0");
    return cfg;
}

std::vector<double> parse_alphas(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ConfigError("--alphas must be a comma-separated list of numbers");
        }
        if (out.back() < 0.0) throw ConfigError("scheduler.alpha must be >= 0");
    }
    if (out.empty()) throw ConfigError("--alphas must name at least one threshold");
    return out;
}

std::string matrix_str(const Matrix& M) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        if (r) os << "; ";
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c) os << ", ";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", M(r, c));
            os << buf;
        }
    }
    os << "]";
    return os.str();
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << contents;
}

fs::path equilibrium_path(const Cli& cli) { return fs::path(cli.out_dir) / "equilibrium.json"; }

/// Reuses <out>/equilibrium.json when its fingerprint matches the config.
EquilibriumSolution solve_or_load(const GameConfig& cfg, const Cli& cli) {
    const fs::path cache = equilibrium_path(cli);
    if (fs::exists(cache)) {
        std::ifstream in(cache);
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            EquilibriumSolution sol = load_solution(buf.str());
            if (sol.config_fingerprint == config_fingerprint(cfg) && sol.n() == cfg.n()) {
                if (!sol.diagnostics.pass && !cli.force) {
                    std::ostringstream msg;
                    msg << "Assumption 2 violated (Xi = " << sol.diagnostics.max_xi()
                        << " >= 1); pass --force to simulate anyway";
                    throw AssumptionError(msg.str());
                }
                return sol;
            }
        } catch (const ConfigError&) {
            // unreadable cache: fall through and recompute
        }
    }
    return solve_equilibrium(cfg, cli.force);
}

void print_solution(const GameConfig& cfg, const EquilibriumSolution& sol) {
    for (std::size_t i = 0; i < sol.gains.size(); ++i) {
        const auto& g = sol.gains[i];
        std::cout << "type " << i << " (mass " << cfg.distribution.mass[i] << ")\n"
                  << "  K      = " << matrix_str(g.K) << "\n"
                  << "  Gamma  = " << matrix_str(g.Gamma) << "\n"
                  << "  Pi     = " << matrix_str(g.Pi) << "\n"
                  << "  H      = " << matrix_str(g.H) << "\n"
                  << "  Mtilde = " << matrix_str(g.Mtilde) << "\n"
                  << "  Xi     = " << sol.diagnostics.xi_per_type[i] << "\n";
    }
    std::cout << "zeta  = " << sol.diagnostics.zeta << "\n"
              << "Lstar = " << matrix_str(sol.Lstar) << "\n"
              << "xbar0 = " << matrix_str(sol.xbar0) << "\n"
              << "assumption 2: " << (sol.diagnostics.pass ? "pass" : "FAIL (not guaranteed)")
              << "\n";
}

int cmd_check(const Cli& cli) {
    const GameConfig cfg = load_with_overrides(cli);
    std::cout << "config ok: " << cfg.distribution.types.size() << " type(s), n=" << cfg.n()
              << ", m=" << cfg.m() << ", N=" << cfg.N << ", T=" << cfg.T << "\n";
    bool all_pass = true;
    for (std::size_t i = 0; i < cfg.distribution.types.size(); ++i) {
        const StructuralDiagnostics sd = check_structural_assumptions(cfg.distribution.types[i]);
        std::cout << "type " << i << ": controllability rank " << sd.controllability_rank << "/"
                  << sd.n << ", observability rank " << sd.observability_rank << "/" << sd.n
                  << (sd.pass() ? "  [pass]" : "  [FAIL]") << "\n";
        all_pass = all_pass && sd.pass();
    }
    if (!all_pass) {
        std::cerr << "error: Assumption 1 violated (controllability/observability)\n";
        return kExitAssumption;
    }
    std::vector<TypeGains> gains;
    for (const auto& t : cfg.distribution.types) {
        gains.push_back(compute_gains(t, cfg.solver_tol, cfg.solver_max_iter));
    }
    const ContractionDiagnostics diag = contraction_diagnostics(gains, cfg.distribution);
    std::cout << "zeta = " << diag.zeta << ", max Xi = " << diag.max_xi()
              << (diag.pass ? "  [pass]" : "  [FAIL]") << "\n";
    if (!diag.pass) {
        std::cerr << "error: Assumption 2 violated (Xi = " << diag.max_xi() << " >= 1)\n";
        return kExitAssumption;
    }
    return kExitOk;
}

int cmd_solve(const Cli& cli) {
    const GameConfig cfg = load_with_overrides(cli);
    const EquilibriumSolution sol = solve_equilibrium(cfg, cli.force);
    print_solution(cfg, sol);
    fs::create_directories(cli.out_dir);
    write_file(equilibrium_path(cli), serialize_solution(sol));
    std::cout << "wrote " << equilibrium_path(cli).string() << "\n";
    return kExitOk;
}

int cmd_simulate(const Cli& cli) {
    const GameConfig cfg = load_with_overrides(cli);
    const EquilibriumSolution sol = solve_or_load(cfg, cli);
    fs::create_directories(cli.out_dir);

    const int threads = default_thread_count();
    const int runs = cfg.runs;
    std::vector<RunMetrics> metrics(static_cast<std::size_t>(runs));
    Trace trace0;

    if (runs == 1) {
        SimOptions opts;
        opts.threads = threads;
        metrics[0] = run_game(cfg, sol, cfg.seed, PolicySpec{}, opts,
                              cli.trace ? &trace0 : nullptr);
    } else {
        parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r) {
                SimOptions opts;
                opts.threads = 1;
                metrics[r] = run_game(cfg, sol, cfg.seed + r, PolicySpec{}, opts,
                                      (cli.trace && r == 0) ? &trace0 : nullptr);
            }
        });
    }

    std::ostringstream summary;
    write_summary_header(summary);
    double mean_cost = 0.0;
    double mean_eps = 0.0;
    double mean_tx = 0.0;
    for (int r = 0; r < runs; ++r) {
        const auto& m = metrics[static_cast<std::size_t>(r)];
        write_summary_row(summary, SummaryRow{r, cfg.N, cfg.T, cfg.scheduler.alpha,
                                              cfg.seed + static_cast<std::uint64_t>(r),
                                              m.avg_cost_per_agent, m.eps_TN, m.tx_rate});
        mean_cost += m.avg_cost_per_agent;
        mean_eps += m.eps_TN;
        mean_tx += m.tx_rate;
    }
    write_file(fs::path(cli.out_dir) / "summary.csv", summary.str());

    if (cli.trace) {
        std::ostringstream tr;
        write_trace_csv(tr, trace0);
        write_file(fs::path(cli.out_dir) / "trace_run0.csv", tr.str());

        std::ostringstream err_csv;
        err_csv << "k,est_err_mean_sq,consensus_spread\n";
        const auto& m0 = metrics[0];
        for (int k = 0; k < cfg.T; ++k) {
            err_csv << k << ',' << format_double(m0.est_err_trace[static_cast<std::size_t>(k)])
                    << ',' << format_double(m0.consensus_spread[static_cast<std::size_t>(k)])
                    << '\n';
        }
        write_file(fs::path(cli.out_dir) / "est_err.csv", err_csv.str());
    }

    std::cout << "runs=" << runs << " N=" << cfg.N << " T=" << cfg.T
              << " alpha=" << cfg.scheduler.alpha << "\n"
              << "mean avg_cost = " << mean_cost / runs << "\n"
              << "mean eps_TN   = " << mean_eps / runs << "\n"
              << "mean tx_rate  = " << mean_tx / runs << "\n"
              << "wrote " << (fs::path(cli.out_dir) / "summary.csv").string() << "\n";
    return kExitOk;
}

int cmd_sweep_alpha(const Cli& cli) {
    const GameConfig cfg = load_with_overrides(cli);
    const EquilibriumSolution sol = solve_or_load(cfg, cli);
    fs::create_directories(cli.out_dir);

    const std::vector<double> alphas =
        cli.alphas_csv.empty() ? std::vector<double>{0.0, 2.0, 4.0, 6.0}
                               : parse_alphas(cli.alphas_csv);
    const int runs = cfg.runs;
    const std::size_t jobs = alphas.size() * static_cast<std::size_t>(runs);
    std::vector<SummaryRow> rows(jobs);

    parallel_for(jobs, default_thread_count(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            const std::size_t ai = j / static_cast<std::size_t>(runs);
            const int r = static_cast<int>(j % static_cast<std::size_t>(runs));
            GameConfig run_cfg = cfg;
            run_cfg.scheduler.alpha = alphas[ai];
            SimOptions opts;
            opts.threads = 1;
            const RunMetrics m = run_game(run_cfg, sol, cfg.seed + static_cast<std::uint64_t>(r),
                                          PolicySpec{}, opts);
            rows[j] = SummaryRow{r, cfg.N, cfg.T, alphas[ai],
                                 cfg.seed + static_cast<std::uint64_t>(r), m.avg_cost_per_agent,
                                 m.eps_TN, m.tx_rate};
        }
    });

    std::ostringstream summary;
    write_summary_header(summary);
    for (const auto& row : rows) write_summary_row(summary, row);
    write_file(fs::path(cli.out_dir) / "sweep_summary.csv", summary.str());

    std::ostringstream quart;
    quart << "alpha,q1,median,q3\n";
    std::cout << "alpha    q1          median      q3\n";
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        std::vector<double> costs;
        costs.reserve(static_cast<std::size_t>(runs));
        for (int r = 0; r < runs; ++r) {
            costs.push_back(rows[ai * static_cast<std::size_t>(runs) +
                                 static_cast<std::size_t>(r)].avg_cost);
        }
        const Quartiles q = quartiles(costs);
        quart << format_double(alphas[ai]) << ',' << format_double(q.q1) << ','
              << format_double(q.median) << ',' << format_double(q.q3) << '\n';
        std::printf("%-8.3g %-11.6g %-11.6g %-11.6g\n", alphas[ai], q.q1, q.median, q.q3);
    }
    write_file(fs::path(cli.out_dir) / "sweep_quartiles.csv", quart.str());
    std::cout << "wrote " << (fs::path(cli.out_dir) / "sweep_summary.csv").string() << " and "
              << (fs::path(cli.out_dir) / "sweep_quartiles.csv").string() << "\n";
    return kExitOk;
}

int cmd_nash_gap(const Cli& cli) {
    const GameConfig cfg = load_with_overrides(cli);
    const EquilibriumSolution sol = solve_or_load(cfg, cli);
    fs::create_directories(cli.out_dir);

    SimOptions opts;
    opts.threads = default_thread_count();
    const GapReport report = nash_gap(cfg, sol, default_deviation_family(), cfg.runs, opts);

    std::ostringstream csv;
    csv << "member,mean_cost,std_err,runs\n";
    std::cout << "member            mean_cost     std_err\n";
    for (const auto& m : report.members) {
        csv << m.name << ',' << format_double(m.mean_cost) << ',' << format_double(m.std_err)
            << ',' << report.runs << '\n';
        std::printf("%-17s %-13.6g %-13.6g\n", m.name.c_str(), m.mean_cost, m.std_err);
    }
    write_file(fs::path(cli.out_dir) / "nash_gap.csv", csv.str());

    std::cout << "equilibrium cost = " << report.equilibrium_cost << " (se "
              << report.equilibrium_se << ")\n"
              << "gap (lower bound over the finite family) = " << report.gap << " (se "
              << report.gap_se << ")\n"
              << "wrote " << (fs::path(cli.out_dir) / "nash_gap.csv").string() << "\n";
    return kExitOk;
}

int cmd_probe_dual_effect(const Cli& cli) {
    const GameConfig base_cfg = load_with_overrides(cli);
    bool all_pass = true;

    const std::vector<std::pair<std::string, PolicySpec>> alts = {
        {"equilibrium vs zero-control", PolicySpec{PolicyKind::zero_control, 1.0, 0}},
        {"equilibrium vs gains x2", PolicySpec{PolicyKind::scaled_gains, 2.0, 0}},
        {"equilibrium vs itself", PolicySpec{PolicyKind::equilibrium, 1.0, 0}},
    };

    for (DecoderInit init : {DecoderInit::prior_mean, DecoderInit::zero}) {
        GameConfig cfg = base_cfg;
        cfg.options.decoder_init = init;
        const EquilibriumSolution sol = solve_or_load(cfg, cli);
        const char* init_name = init == DecoderInit::prior_mean ? "prior_mean" : "zero";
        for (const auto& [name, alt] : alts) {
            SimOptions opts;
            opts.tamper_scheduler = cli.tamper_scheduler;
            const ProbeReport rep = dual_effect_probe(cfg, sol, cfg.seed, alt, opts);
            const bool ok = rep.pass;
            all_pass = all_pass && ok;
            std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (decoder_init=" << init_name
                      << "): max |err diff| = " << rep.max_err_diff << ", gamma traces "
                      << (rep.gamma_match ? "match" : "DIFFER") << "\n";
        }
    }
    if (!all_pass) {
        std::cerr << "error: dual-effect invariance violated\n";
        return 1;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQ mean-field games over threshold-scheduled AWGN links"};
    app.require_subcommand(1);

    Cli cli;
    const auto add_common = [&cli](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "config file (JSON)")->required();
        sub->add_option("--out", cli.out_dir, "output directory (default .)");
        sub->add_option("--agents", cli.agents, "override sim.N");
        sub->add_option("--horizon", cli.horizon, "override sim.T");
        sub->add_option("--seed", cli.seed, "override sim.seed");
        sub->add_option("--runs", cli.runs, "override sim.runs");
        sub->add_flag("--force", cli.force, "proceed even if Assumption 2 fails");
        sub->add_option("--decoder-init", cli.decoder_init,
                        "decoder initialization: prior_mean or zero");
    };

    CLI::App* check = app.add_subcommand("check", "validate a config, no simulation");
    add_common(check);
    CLI::App* solve = app.add_subcommand("solve", "compute and store the equilibrium");
    add_common(solve);
    CLI::App* simulate = app.add_subcommand("simulate", "run finite-N games at one threshold");
    add_common(simulate);
    simulate->add_option("--alpha", cli.alpha, "override scheduler.alpha");
    simulate->add_flag("--trace", cli.trace, "also write trace_run0.csv and est_err.csv");
    CLI::App* sweep = app.add_subcommand("sweep-alpha", "cost-vs-threshold sweep");
    add_common(sweep);
    sweep->add_option("--alphas", cli.alphas_csv, "comma-separated thresholds (default 0,2,4,6)");
    CLI::App* gap = app.add_subcommand("nash-gap", "deviation-family gap estimate");
    add_common(gap);
    gap->add_option("--alpha", cli.alpha, "override scheduler.alpha");
    CLI::App* probe = app.add_subcommand("probe-dual-effect", "exact invariance probe");
    add_common(probe);
    probe->add_flag("--tamper-scheduler", cli.tamper_scheduler,
                    "test hook: feed control into the scheduler (negative control)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(check)) return cmd_check(cli);
        if (app.got_subcommand(solve)) return cmd_solve(cli);
        if (app.got_subcommand(simulate)) return cmd_simulate(cli);
        if (app.got_subcommand(sweep)) return cmd_sweep_alpha(cli);
        if (app.got_subcommand(gap)) return cmd_nash_gap(cli);
        if (app.got_subcommand(probe)) return cmd_probe_dual_effect(cli);
    } catch (const AssumptionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssumption;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
