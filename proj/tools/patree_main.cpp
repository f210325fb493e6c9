// Command line front end for the attachment-tree laboratory.
//
// Exit codes: 0 success, 1 usage or configuration problem, 2 a requested
// check found violations (witnesses go to stderr).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "patree/census.hpp"
#include "patree/ensemble.hpp"
#include "patree/errors.hpp"
#include "patree/kernel.hpp"
#include "patree/martingale.hpp"
#include "patree/meanfield.hpp"
#include "patree/oracle.hpp"
#include "patree/sampler.hpp"
#include "patree/verify.hpp"

namespace {

using namespace patree;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct CommonOpts {
    std::int64_t tau0 = 4;
    std::string initial = "path";
    std::string edges_file;
    std::int64_t horizon = 1000;
    std::uint64_t seed = 1;
    std::vector<std::int64_t> snapshots;
    int log_snapshots = 0;
    std::string out_dir;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tau0", o.tau0, "seed tree size (>= 2)");
    cmd->add_option("--initial", o.initial, "seed tree shape")
        ->check(CLI::IsMember({"path", "star", "edges"}));
    cmd->add_option("--edges-file", o.edges_file,
                    "file of 'a b' edge lines for --initial edges");
    cmd->add_option("--horizon", o.horizon, "final time");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--snapshots", o.snapshots,
                    "explicit snapshot times (increasing)");
    cmd->add_option("--log-snapshots", o.log_snapshots,
                    "this many log-spaced snapshot times instead");
    cmd->add_option("--out", o.out_dir, "directory for output files")
        ->envname("PATREE_OUT_DIR");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

PaConfig base_config(const CommonOpts& o) {
    PaConfig config;
    config.tau0 = o.tau0;
    config.horizon = o.horizon;
    config.master_seed = o.seed;
    if (o.initial == "path") {
        config.initial = InitialGraph::path;
    } else if (o.initial == "star") {
        config.initial = InitialGraph::star;
    } else {
        config.initial = InitialGraph::edges;
        std::ifstream in(o.edges_file);
        if (!in) throw ConfigError("cannot open --edges-file");
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        while (in >> a >> b) config.edges.emplace_back(a, b);
    }
    if (!o.snapshots.empty()) {
        config.snapshot_times = o.snapshots;
    } else if (o.log_snapshots > 0) {
        config.snapshot_times =
            log_spaced_times(o.tau0, o.horizon, o.log_snapshots);
    }
    return config;
}

// Writes to <out_dir>/<name> when an output directory was given, otherwise
// to stdout.
void emit(const std::string& out_dir, const std::string& name,
          const std::string& content) {
    if (out_dir.empty()) {
        std::cout << content;
        return;
    }
    const std::string path = out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
    if (!out) throw ConfigError("short write to " + path);
    std::cout << path << "\n";
}

int run_simulate(const CommonOpts& o, const std::vector<std::uint32_t>& watch) {
    PaConfig config = base_config(o);
    if (config.snapshot_times.empty()) {
        config.snapshot_times = log_spaced_times(o.tau0, o.horizon, 10);
    }
    config.watch = watch;
    Rng rng(config.master_seed);
    const RunResult result = run_trajectory(config, rng);

    std::string census_csv = census_csv_header();
    std::string tails_csv = tail_csv_header();
    for (const DegreeCensus& census : result.trajectory.censuses) {
        append_census_csv(census_csv, census);
        append_tail_csv(tails_csv, census);
    }
    emit(o.out_dir, "census.csv", census_csv);
    emit(o.out_dir, "tails.csv", tails_csv);
    if (!watch.empty()) {
        std::string watch_csv = "t,vertex,degree\n";
        char line[96];
        for (const WatchTrace& trace : result.trajectory.watch) {
            for (std::size_t i = 0; i < trace.degrees.size(); ++i) {
                std::snprintf(line, sizeof(line), "%lld,%u,%u\n",
                              static_cast<long long>(
                                  config.tau0 + static_cast<std::int64_t>(i)),
                              trace.vertex, trace.degrees[i]);
                watch_csv += line;
            }
        }
        emit(o.out_dir, "watch.csv", watch_csv);
    }
    return kExitOk;
}

int run_ensemble_cmd(const CommonOpts& o, std::int64_t runs, int threads,
                     std::int64_t ell_max, double psi, double omega,
                     std::int64_t mem_budget_mib,
                     const std::vector<std::uint32_t>& watch) {
    EnsembleConfig config;
    config.base = base_config(o);
    if (config.base.snapshot_times.empty()) {
        config.base.snapshot_times = log_spaced_times(o.tau0, o.horizon, 10);
    }
    config.base.watch = watch;
    config.n_runs = runs;
    config.threads = threads;
    config.ell_max = ell_max;
    config.psi = psi;
    config.omega = omega;
    config.mem_budget_bytes = mem_budget_mib << 20;
    const EnsembleReport report = run_ensemble(config);
    emit(o.out_dir, "ensemble.json", ensemble_report_json(report));

    bool ok = true;
    for (const CheckResult& check : report.checks) {
        if (!check.ok) {
            ok = false;
            std::cerr << "violation: " << check.name << ": " << check.detail
                      << "\n";
        }
    }
    return ok ? kExitOk : kExitViolation;
}

int run_meanfield(const CommonOpts& o, std::int64_t ell0) {
    const PaConfig config = base_config(o);
    const DegreeCensus initial = state_census(init_state(config));
    std::vector<std::int64_t> times = config.snapshot_times;
    if (times.empty()) times = log_spaced_times(o.tau0, o.horizon, 10);
    emit(o.out_dir, "meanfield.csv",
         meanfield_csv(initial, ell0, o.horizon, times));
    return kExitOk;
}

int run_kernel(const CommonOpts& o, std::int64_t ell, std::int64_t tau,
               bool check) {
    const HittingGrid grid = hitting_grid(ell, o.tau0, tau);
    emit(o.out_dir, "kernel.csv", kernel_csv(grid));
    if (!check) return kExitOk;
    const ErrorGridReport report = error_grid_check(grid);
    if (report.violations() == 0) return kExitOk;
    std::cerr << "violation: kernel error bound: " << report.violations()
              << " cells over budget (main " << report.main.violations
              << ", mid " << report.mid.violations << ", trivial "
              << report.trivial.violations << ")\n";
    return kExitViolation;
}

int run_martingale(const CommonOpts& o, std::uint32_t vertex,
                   std::int64_t ell, double theta, double budget,
                   double delta) {
    PaConfig config = base_config(o);
    if (config.snapshot_times.empty()) {
        config.snapshot_times = log_spaced_times(o.tau0, o.horizon, 10);
    }
    RunOptions options;
    options.record_events = true;
    Rng rng(config.master_seed);
    PaConfig replay = config;
    replay.watch.clear();
    const RunResult result = run_trajectory(replay, rng, options);
    const TreeState initial = init_state(config);

    MartingaleTrace trace;
    if (ell > 0) {
        CensusCountChain chain(initial, result.trajectory.targets, ell);
        trace = compensate(chain);
    } else {
        VertexDegreeChain chain(initial, result.trajectory.targets, vertex);
        trace = compensate(chain);
    }
    std::string csv = martingale_csv_header();
    append_martingale_csv(csv, trace, 0, theta, budget, delta,
                          config.snapshot_times);
    emit(o.out_dir, "martingale.csv", csv);
    return kExitOk;
}

int run_oracle(const CommonOpts& o) {
    const PaConfig config = base_config(o);
    const DegreeCensus initial = state_census(init_state(config));
    emit(o.out_dir, "oracle.json", oracle_report_json(initial, o.horizon));
    return kExitOk;
}

int run_verify(const std::string& suite, double fraction, int threads) {
    VerifyOptions options;
    options.run_fraction = fraction;
    options.horizon_fraction = fraction < 1.0 ? fraction : 1.0;
    options.threads = threads;

    std::vector<CheckOutcome> outcomes;
    if (suite == "deterministic") {
        outcomes = verify_deterministic();
    } else if (suite == "statistical") {
        outcomes = verify_statistical(options);
    } else {
        outcomes = verify_all(options);
    }
    bool ok = true;
    for (const CheckOutcome& outcome : outcomes) {
        std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << outcome.name
                  << ": " << outcome.detail << "\n";
        if (!outcome.pass) {
            ok = false;
            std::cerr << "violation: " << outcome.name << ": "
                      << outcome.detail << "\n";
        }
    }
    return ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and verification laboratory for the "
                 "preferential attachment tree"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key=value file");
    app.failure_message(CLI::FailureMessage::help);

    CommonOpts common;

    auto* simulate = app.add_subcommand(
        "simulate", "one trajectory; census, tail, and watch tables");
    std::vector<std::uint32_t> watch;
    add_common(simulate, common);
    simulate->add_option("--watch", watch, "seed vertices to trace");

    auto* ensemble = app.add_subcommand(
        "ensemble", "replicated runs with exact-merge statistics");
    add_common(ensemble, common);
    std::int64_t runs = 100;
    int threads = 0;
    std::int64_t ell_max = 10;
    double psi = 0.0;
    double omega = 0.0;
    std::int64_t mem_budget_mib = 4096;
    ensemble->add_option("--runs", runs, "number of runs");
    ensemble->add_option("--threads", threads, "worker threads (0 = auto)");
    ensemble->add_option("--ell-max", ell_max, "tracked degree classes");
    ensemble->add_option("--psi", psi,
                         "deviation-check parameter (0 = skip)");
    ensemble->add_option("--omega", omega,
                         "watched-vertex envelope parameter (0 = skip)");
    ensemble->add_option("--mem-budget", mem_budget_mib,
                         "memory budget in MiB");
    ensemble->add_option("--watch", watch, "seed vertices to trace");

    auto* meanfield = app.add_subcommand(
        "meanfield", "expectation recurrences and profile tables");
    add_common(meanfield, common);
    std::int64_t ell0 = 100;
    meanfield->add_option("--ell0", ell0, "recurrence truncation class");

    auto* kernel = app.add_subcommand(
        "kernel", "degree-hitting kernel grid and error bounds");
    add_common(kernel, common);
    std::int64_t kernel_ell = 8;
    std::int64_t kernel_tau = 1001;
    bool kernel_check = false;
    kernel->add_option("--ell", kernel_ell, "target degree");
    kernel->add_option("--tau", kernel_tau, "kernel horizon");
    kernel->add_flag("--check", kernel_check,
                     "check the surrogate error bounds (exit 2 on "
                     "violations)");

    auto* martingale = app.add_subcommand(
        "martingale", "compensator trace of one observable on one run");
    add_common(martingale, common);
    std::uint32_t mart_vertex = 1;
    std::int64_t mart_ell = 0;
    double theta = 0.1;
    double budget = 1e9;
    double delta = 1e9;
    martingale->add_option("--vertex", mart_vertex,
                           "seed vertex whose degree is compensated");
    martingale->add_option("--ell", mart_ell,
                           "compensate the count of this degree class "
                           "instead");
    martingale->add_option("--theta", theta, "exponential tilt");
    martingale->add_option("--budget-R", budget, "quadratic budget marker");
    martingale->add_option("--delta", delta, "threshold marker");

    auto* oracle = app.add_subcommand(
        "oracle", "exact census distribution at tiny scale (rational)");
    add_common(oracle, common);

    auto* verify = app.add_subcommand(
        "verify", "run the acceptance checks (exit 2 on failure)");
    std::string suite = "deterministic";
    double fraction = 1.0;
    int verify_threads = 0;
    verify->add_option("--suite", suite, "which checks to run")
        ->check(CLI::IsMember({"deterministic", "statistical", "all"}));
    verify->add_option("--fraction", fraction,
                       "scale the replication sizes (0 < f <= 1)");
    verify->add_option("--threads", verify_threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(common, watch);
        if (ensemble->parsed()) {
            return run_ensemble_cmd(common, runs, threads, ell_max, psi,
                                    omega, mem_budget_mib, watch);
        }
        if (meanfield->parsed()) return run_meanfield(common, ell0);
        if (kernel->parsed()) {
            return run_kernel(common, kernel_ell, kernel_tau, kernel_check);
        }
        if (martingale->parsed()) {
            return run_martingale(common, mart_vertex, mart_ell, theta,
                                  budget, delta);
        }
        if (oracle->parsed()) return run_oracle(common);
        if (verify->parsed()) {
            return run_verify(suite, fraction, verify_threads);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConsistencyError& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return kExitViolation;
    }
    return kExitUsage;
}
