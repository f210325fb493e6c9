#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patree/martingale.hpp"
#include "patree/sampler.hpp"

// Many-run replication harness.  Each run gets an independent seed derived
// from the master seed and its run index, records a compact integer summary
// per snapshot, and the summaries are folded into the report in run-index
// order.  Because the per-run records depend only on (master_seed, index)
// and the fold is a fixed-order reduction of exact integer accumulators,
// the report is bit-identical no matter how many worker threads ran.

namespace patree {

struct EnsembleConfig {
    PaConfig base;
    std::int64_t n_runs = 1;
    int threads = 0;  // 0: one worker per hardware thread
    std::int64_t ell_max = 10;       // degree classes tracked per snapshot
    double psi = 0.0;                // enables deviation checks when > 0
    double omega = 0.0;              // enables watched-vertex envelope checks
    std::int64_t mem_budget_bytes = std::int64_t{4} << 30;

    void validate() const;
};

// Exact moment accumulator: integer sums merge associatively and
// commutatively, so parallel reduction cannot change the result.
struct MomentStats {
    std::int64_t n = 0;
    std::int64_t sum = 0;
    unsigned __int128 sum_sq = 0;
    std::int64_t min = 0;
    std::int64_t max = 0;

    void add(std::int64_t v);
    void merge(const MomentStats& other);
    double mean() const;
    double variance() const;  // unbiased sample variance
};

struct CheckResult {
    std::string name;
    std::int64_t checked_runs = 0;
    std::int64_t violating_runs = 0;
    double bound = 0.0;           // allowed failure probability per run
    double normalized_max = 0.0;  // sup of the check's normalized statistic
    double statistic = 0.0;       // check-specific scalar (e.g. fitted slope)
    bool ok = true;
    std::string detail;
};

struct EnsembleReport {
    // configuration echo
    std::int64_t tau0 = 0;
    std::int64_t horizon = 0;
    std::int64_t n_runs = 0;
    std::uint64_t master_seed = 0;
    std::int64_t ell_max = 0;
    double psi = 0.0;
    double omega = 0.0;
    std::vector<std::int64_t> snapshot_times;
    std::vector<std::uint32_t> watch;
    std::vector<std::int64_t> watch_m0;

    std::int64_t runs_completed = 0;
    std::int64_t runs_failed = 0;  // runs lost to allocation failure

    // Row-major [snapshot][ell-1], ell = 1..ell_max.
    std::vector<MomentStats> count_stats;
    std::vector<MomentStats> tail_stats;
    std::vector<MomentStats> overflow_stats;    // per snapshot
    std::vector<MomentStats> max_degree_stats;  // per snapshot

    // Per-run violation tallies for the deviation checks (a run counts once
    // per check however many cells it breaks).
    std::int64_t count_dev_runs = 0;
    std::int64_t tail_dev_runs = 0;
    std::int64_t max_degree_runs = 0;
    std::int64_t early_envelope_runs = 0;
    std::int64_t crude_growth_runs = 0;     // 2 m0 sqrt((t-1)/(tau0-1)) cap
    std::int64_t crude_growth_checked = 0;  // runs where that cap applies
    double count_norm_max = 0.0;  // sup |D - closed| / sqrt(t ln(psi t)/l^3)
    double tail_norm_max = 0.0;   // sup |U - closed| * l / sqrt(t ln(psi t))

    std::vector<CheckResult> checks;

    const MomentStats& count_at(std::size_t snap_idx, std::int64_t ell) const;
    const MomentStats& tail_at(std::size_t snap_idx, std::int64_t ell) const;
};

EnsembleReport run_ensemble(const EnsembleConfig& config);

// Deviation checks over a finished report.  Each returns a CheckResult and
// appends it to report.checks.
CheckResult check_count_concentration(EnsembleReport& report);
CheckResult check_tail_concentration(EnsembleReport& report);
// Max-degree cap psi sqrt(t-1) plus a least-squares fit of
// ln mean(max degree) against ln t across snapshots; the fitted slope is
// returned in `statistic` (sqrt growth shows as slope 1/2).
CheckResult check_max_degree(EnsembleReport& report);
CheckResult check_early_degrees(EnsembleReport& report);
void evaluate_checks(EnsembleReport& report);

std::string ensemble_report_json(const EnsembleReport& report);

// Replication harness for the seed-vertex degree compensator: per run it
// tracks sup_t |M_t| and the final quadratic budget, online, without
// storing trajectories.
struct DegreeMartingaleEnsemble {
    std::int64_t tau0 = 0;
    std::int64_t tau = 0;
    std::uint32_t vertex = 0;
    std::int64_t m0 = 0;
    std::vector<RunExtremes> runs;
};

DegreeMartingaleEnsemble run_degree_martingale_ensemble(
    const PaConfig& base, std::uint32_t vertex, std::int64_t n_runs,
    int threads);

}  // namespace patree
