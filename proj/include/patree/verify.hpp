#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patree/ensemble.hpp"

// Acceptance checks: the runnable definition of "the laboratory works".
// Every check pins its own parameters and tolerances in code and reports a
// single pass/fail with a one-line quantitative summary.  The CLI verify
// command and the acceptance test binary both run exactly these.

namespace patree {

struct CheckOutcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    // Scales the run counts of the replication checks (the acceptance suite
    // uses 1.0; the CLI can dial it down for a smoke run).  Never drops a
    // check below a handful of runs.
    double run_fraction = 1.0;
    // Scales the horizon of the throughput trial (floor 1e6 steps).
    double horizon_fraction = 1.0;
    int threads = 0;
    std::uint64_t master_seed = 0xC0FFEE5EEDBA5E11ull;
};

// Deterministic checks (exact oracles and closed forms).
CheckOutcome check_oracle_recurrence_equality();
CheckOutcome check_profile_fixed_point();
CheckOutcome check_profile_envelope_random_seeds();
CheckOutcome check_hitting_kernel_forms();
CheckOutcome check_beta_integral_agreement();
CheckOutcome check_kernel_error_grid();
CheckOutcome check_quadratic_sums_and_curvature();

// Statistical checks.  The mean-agreement and deviation-bound checks share
// one replication; build its config here and run it once.
EnsembleConfig acceptance_ensemble_config(const VerifyOptions& options);
CheckOutcome check_ensemble_mean_agreement(const EnsembleConfig& config,
                                           const EnsembleReport& report,
                                           double elapsed_seconds);
CheckOutcome check_deviation_bounds(const EnsembleReport& report);
CheckOutcome check_martingale_tail_bounds(const VerifyOptions& options);
CheckOutcome check_max_degree_growth(const VerifyOptions& options);
CheckOutcome check_throughput_and_memory(const VerifyOptions& options);

std::vector<CheckOutcome> verify_deterministic();
std::vector<CheckOutcome> verify_statistical(const VerifyOptions& options);
// All twelve, in their canonical order.
std::vector<CheckOutcome> verify_all(const VerifyOptions& options);

}  // namespace patree
