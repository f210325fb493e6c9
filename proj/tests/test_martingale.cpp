#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "patree/census.hpp"
#include "patree/ensemble.hpp"
#include "patree/martingale.hpp"
#include "patree/rng.hpp"
#include "patree/sampler.hpp"

using namespace patree;

namespace {

struct Replay {
    TreeState initial;
    std::vector<std::uint32_t> targets;
    Trajectory trajectory;
};

Replay record_run(std::int64_t tau0, std::int64_t horizon, std::uint64_t seed,
                  std::vector<std::uint32_t> watch = {}) {
    PaConfig config;
    config.tau0 = tau0;
    config.horizon = horizon;
    config.watch = std::move(watch);
    Replay replay;
    replay.initial = init_state(config);
    Rng rng(seed);
    RunOptions options;
    options.record_events = true;
    RunResult run = run_trajectory(config, rng, options);
    replay.targets = std::move(run.trajectory.targets);
    replay.trajectory = std::move(run.trajectory);
    return replay;
}

// Chain that never moves: every moment is zero.
class FrozenChain final : public ChainAdapter {
  public:
    std::int64_t start_time() const override { return 2; }
    std::int64_t end_time() const override { return 42; }
    double initial_value() const override { return 3.0; }
    double jump_bound() const override { return 1.0; }
    StepMoments step(std::int64_t) override {
        StepMoments moments;
        moments.g_after = 3.0;
        moments.up = 0.0;
        moments.down = 0.0;
        return moments;
    }
};

}  // namespace

TEST_CASE("vertex-degree chain reports the textbook drift") {
    const Replay replay = record_run(3, 4, 5);
    VertexDegreeChain chain(replay.initial, replay.targets, 2);
    CHECK(chain.start_time() == 3);
    CHECK(chain.end_time() == 4);
    CHECK(chain.initial_value() == doctest::Approx(2.0));

    // Vertex 2 is the middle of the path: degree 2 at time 3, so the one
    // step has drift 2 / (2 * (3 - 1)) = 1/2 and matching second moment.
    const StepMoments moments = chain.step(3);
    CHECK(moments.drift == doctest::Approx(0.5));
    CHECK(moments.second_moment == doctest::Approx(0.5));
    CHECK(moments.up == doctest::Approx(0.5));
    CHECK(moments.down == doctest::Approx(0.0));
    const double expected_g =
        replay.targets[0] == 2 ? 3.0 : 2.0;
    CHECK(moments.g_after == doctest::Approx(expected_g));
}

TEST_CASE("chains refuse out-of-order replay") {
    const Replay replay = record_run(3, 10, 5);
    VertexDegreeChain chain(replay.initial, replay.targets, 1);
    CHECK_NOTHROW(chain.step(3));
    CHECK_THROWS_AS(chain.step(3), ConsistencyError);
    CHECK_THROWS_AS(chain.step(9), ConsistencyError);
}

TEST_CASE("compensated trace starts at zero and respects jump budgets") {
    const Replay replay = record_run(4, 400, 11);
    VertexDegreeChain chain(replay.initial, replay.targets, 1);
    const MartingaleTrace trace = compensate(chain);

    REQUIRE(trace.m.size() == static_cast<std::size_t>(400 - 4 + 1));
    CHECK(trace.m[0] == 0.0);
    CHECK(trace.tau0 == 4);
    CHECK(trace.tau == 400);

    const std::vector<double> phi = trace.phi();
    REQUIRE(phi.size() == trace.m2.size());
    double prev_phi = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        // Martingale increments are bounded by twice the jump bound and the
        // quadratic budget climbs by at most J^2 per step.
        CHECK(std::fabs(trace.m[i + 1] - trace.m[i]) <=
              2.0 * trace.jump_bound + 1e-12);
        CHECK(phi[i] >= prev_phi);
        CHECK(phi[i] - prev_phi <=
              trace.jump_bound * trace.jump_bound + 1e-12);
        prev_phi = phi[i];
    }
    CHECK(trace.phi_final() == doctest::Approx(phi.back()));
    CHECK(trace.sup_abs_m() >= std::fabs(trace.m.back()));

    // Budget stop: a budget above the total never trips.
    CHECK(trace.budget_stop_time(trace.phi_final() + 1.0) == 401);
    const std::int64_t stop = trace.budget_stop_time(trace.phi_final() / 2.0);
    CHECK(stop >= trace.tau0);
    CHECK(stop <= trace.tau);
}

TEST_CASE("census-count chain tracks the census it replays, step by step") {
    const Replay replay = record_run(4, 200, 17);

    for (std::int64_t ell : {1, 2, 5}) {
        CensusCountChain chain(replay.initial, replay.targets, ell);
        // Independent replay of the same targets through the census tracker.
        std::vector<std::uint32_t> deg = replay.initial.deg;
        LiveCensus live;
        live.reset(state_census(replay.initial));

        CHECK(chain.initial_value() ==
              doctest::Approx(static_cast<double>(live.count(ell))));
        for (std::int64_t s = 4; s < 200; ++s) {
            // Pre-step law from the independent census.
            const double den = 2.0 * static_cast<double>(s - 1);
            double up, down;
            if (ell == 1) {
                up = 1.0 - static_cast<double>(live.count(1)) / den;
                down = 0.0;
            } else {
                up = static_cast<double>(ell - 1) *
                     static_cast<double>(live.count(ell - 1)) / den;
                down = static_cast<double>(ell) *
                       static_cast<double>(live.count(ell)) / den;
            }

            const StepMoments moments = chain.step(s);
            CHECK(moments.up == doctest::Approx(up));
            CHECK(moments.down == doctest::Approx(down));
            CHECK(moments.drift == doctest::Approx(up - down));
            CHECK(moments.second_moment == doctest::Approx(up + down));

            const std::uint32_t target =
                replay.targets[static_cast<std::size_t>(s - 4)];
            const std::uint32_t old_deg = deg[target];
            deg[target] += 1;
            deg.push_back(1);
            live.record_attachment(old_deg);
            CHECK(moments.g_after ==
                  doctest::Approx(static_cast<double>(live.count(ell))));
        }
    }
}

TEST_CASE("zero tilt and frozen chains give the constant supermartingale") {
    const Replay replay = record_run(4, 100, 23);
    VertexDegreeChain chain(replay.initial, replay.targets, 1);
    const MartingaleTrace trace = compensate(chain);
    for (double z : exp_supermartingale(trace, 0.0)) {
        CHECK(z == doctest::Approx(1.0));
    }

    FrozenChain frozen;
    const MartingaleTrace still = compensate(frozen);
    CHECK(still.sup_abs_m() == 0.0);
    CHECK(still.phi_final() == 0.0);
    for (double z : exp_supermartingale(still, 1.7)) {
        CHECK(z == doctest::Approx(1.0));
    }

    CHECK_THROWS_AS(exp_supermartingale(trace, 51.0), BudgetError);
}

TEST_CASE("martingale and supermartingale sanity across many runs") {
    constexpr int kRuns = 2000;
    constexpr std::int64_t kTau = 50;
    double sum_m = 0.0, sum_m2 = 0.0;
    double sum_z = 0.0, sum_z2 = 0.0;
    for (int i = 0; i < kRuns; ++i) {
        const Replay replay =
            record_run(4, kTau, derive_run_seed(0xABCDEFull, i));
        VertexDegreeChain chain(replay.initial, replay.targets, 1);
        const MartingaleTrace trace = compensate(chain);
        const double m = trace.m.back();
        sum_m += m;
        sum_m2 += m * m;
        const double z = exp_supermartingale(trace, 0.1).back();
        sum_z += z;
        sum_z2 += z * z;
    }
    const double mean_m = sum_m / kRuns;
    const double var_m = (sum_m2 - kRuns * mean_m * mean_m) / (kRuns - 1);
    const double se_m = std::sqrt(var_m / kRuns);
    INFO("final M mean " << mean_m << " se " << se_m);
    CHECK(std::fabs(mean_m) <= 4.0 * se_m);

    const double mean_z = sum_z / kRuns;
    const double var_z = (sum_z2 - kRuns * mean_z * mean_z) / (kRuns - 1);
    const double se_z = std::sqrt(var_z / kRuns);
    INFO("final Z mean " << mean_z << " se " << se_z);
    CHECK(mean_z <= 1.0 + 4.0 * se_z);
}

TEST_CASE("tail thresholds match their closed forms") {
    const KeyThreshold wide = key_threshold(8.0, 100.0, 1.0);
    CHECK(wide.delta == doctest::Approx(std::sqrt(800.0)));
    CHECK(wide.bound == doctest::Approx(2.0 * std::exp(-2.0)));
    CHECK(wide.tilt_case == 1);
    CHECK(wide.alpha > 0.0);

    const KeyThreshold spiky = key_threshold(16.0, 4.0, 2.0);
    CHECK(spiky.delta == doctest::Approx(32.0));
    CHECK(spiky.bound == doctest::Approx(2.0 * std::exp(-4.0)));
    CHECK(spiky.tilt_case == 2);

    CHECK_THROWS_AS(key_threshold(0.0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(key_threshold(1.0, -1.0, 1.0), ConfigError);
}

TEST_CASE("doubling schedule quadruples the budget between stops") {
    auto R = [](std::int64_t t) { return static_cast<double>(t + 1); };
    const SparseSchedule schedule =
        sparse_schedule_doubling(R, 2, 1000, 8.0, 1.0);
    REQUIRE(!schedule.times.empty());
    CHECK(schedule.times.front() == 8);  // first t with t + 1 > 8
    for (std::size_t i = 1; i < schedule.times.size(); ++i) {
        CHECK(schedule.times[i] > schedule.times[i - 1]);
    }
    CHECK(schedule.times.back() == 1000);
    // Every interior stop is the first time the budget exceeds 4x its value
    // at the previous stop.
    for (std::size_t i = 0; i + 1 < schedule.times.size(); ++i) {
        const std::int64_t next = schedule.times[i + 1];
        if (next == 1000) break;
        CHECK(R(next) > 4.0 * R(schedule.times[i]));
        CHECK(R(next - 1) <= 4.0 * R(schedule.times[i]));
    }
    // Stop count stays logarithmic in the budget ratio.
    const double n_max = std::log(8.0 * R(999) / 8.0);
    CHECK(static_cast<double>(schedule.times.size()) <= n_max);
    CHECK(schedule.bound ==
          doctest::Approx(2.0 * std::log(8.0 * R(999) / 8.0) *
                          std::exp(-2.0)));

    CHECK(sparse_delta_doubling(8.0, 1.0, 100.0) ==
          doctest::Approx(std::max(8.0, 2.0 * std::sqrt(800.0))));

    // Horizons whose budget never clears the floor are refused.
    CHECK_THROWS_AS(sparse_schedule_doubling(R, 2, 5, 8.0, 1.0), ConfigError);
}

TEST_CASE("log-weighted schedule starts past its entry floor") {
    auto R = [](std::int64_t t) { return static_cast<double>(t + 1); };
    const SparseSchedule schedule =
        sparse_schedule_log(R, 2, 100000, 8.0, 1.0);
    REQUIRE(!schedule.times.empty());
    const double floor = 2.0 * 8.0 * std::log(8.0);
    CHECK(R(schedule.times.front() - 1) <= floor);
    CHECK(R(schedule.times.front()) > floor);
    CHECK(schedule.bound == doctest::Approx(5.0 * std::exp(-2.0)));
    CHECK(sparse_delta_log(8.0, 1.0, 1000.0) ==
          doctest::Approx(2.0 * std::max(8.0 * std::log(8.0),
                                         std::sqrt(8.0 * 1000.0 *
                                                   std::log(1000.0)))));
    // psi below 4/J^2 has no certificate.
    CHECK_THROWS_AS(sparse_schedule_log(R, 2, 100000, 3.0, 1.0), ConfigError);
}

TEST_CASE("tail frequency counts hits under the budget condition") {
    std::vector<RunExtremes> runs = {
        {1.0, 10.0}, {5.0, 10.0}, {10.0, 200.0}, {0.5, 50.0}};
    const TailFrequency tf = tail_frequency(runs, 4.0, 100.0, 0.999);
    CHECK(tf.n_runs == 4);
    CHECK(tf.hits == 1);  // the sup 10.0 run blew its budget, so no hit
    CHECK(tf.frequency == doctest::Approx(0.25));
    CHECK(tf.upper_confidence > tf.frequency);
    CHECK(tf.upper_confidence <= 1.0);
    CHECK(tf.ok == (tf.upper_confidence <= tf.bound));

    // Zero hits still cannot certify a tight bound from four runs: the
    // one-sided 99% upper limit for 0/4 is 1 - 0.01^(1/4) ~ 0.68.
    const double inf = std::numeric_limits<double>::infinity();
    const TailFrequency none = tail_frequency(runs, inf, 100.0, 0.5);
    CHECK(none.hits == 0);
    CHECK(none.upper_confidence ==
          doctest::Approx(1.0 - std::pow(0.01, 0.25)));
    CHECK(!none.ok);

    // A hundred clean runs do certify a 10% bound.
    std::vector<RunExtremes> clean(100, RunExtremes{0.0, 1.0});
    const TailFrequency certified = tail_frequency(clean, 1.0, 2.0, 0.1);
    CHECK(certified.hits == 0);
    CHECK(certified.ok);

    const TailFrequency empty = tail_frequency({}, 1.0, 1.0, 0.5);
    CHECK(!empty.ok);
}

TEST_CASE("replication harness tracks extremes without trajectories") {
    PaConfig base;
    base.tau0 = 4;
    base.horizon = 200;
    base.master_seed = 77;
    const DegreeMartingaleEnsemble ensemble =
        run_degree_martingale_ensemble(base, 1, 100, 2);
    CHECK(ensemble.tau0 == 4);
    CHECK(ensemble.tau == 200);
    CHECK(ensemble.m0 == 1);
    REQUIRE(ensemble.runs.size() == 100);
    for (const RunExtremes& run : ensemble.runs) {
        CHECK(run.sup_abs_m >= 0.0);
        CHECK(run.phi_final > 0.0);
        CHECK(run.phi_final <= 196.0 + 1e-9);
    }

    // Scheduling must not affect the recorded extremes.
    const DegreeMartingaleEnsemble serial =
        run_degree_martingale_ensemble(base, 1, 100, 1);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(serial.runs[i].sup_abs_m == ensemble.runs[i].sup_abs_m);
        CHECK(serial.runs[i].phi_final == ensemble.runs[i].phi_final);
    }
}

TEST_CASE("csv trace lists the requested times under the fixed header") {
    const Replay replay = record_run(4, 100, 3);
    VertexDegreeChain chain(replay.initial, replay.targets, 1);
    const MartingaleTrace trace = compensate(chain);

    std::string out = martingale_csv_header();
    append_martingale_csv(out, trace, 0, 0.1, 10.0, 5.0, {4, 50, 100});
    CHECK(out.rfind("run,t,M,Phi,Z,stopped_R,stopped_delta\n", 0) == 0);
    std::size_t rows = 0;
    for (char c : out) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 4);
}
