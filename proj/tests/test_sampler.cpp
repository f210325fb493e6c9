#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "patree/census.hpp"
#include "patree/rng.hpp"
#include "patree/sampler.hpp"

using namespace patree;

TEST_CASE("seed trees have the advertised degree sequences") {
    PaConfig config;
    config.tau0 = 2;
    config.horizon = 2;
    TreeState two = init_state(config);
    CHECK(two.t == 2);
    REQUIRE(two.deg.size() == 3);
    CHECK(two.deg[1] == 1);
    CHECK(two.deg[2] == 1);
    CHECK(two.pool.size() == 2);

    config.tau0 = 4;
    config.horizon = 4;
    TreeState path = init_state(config);
    CHECK(path.deg[1] == 1);
    CHECK(path.deg[2] == 2);
    CHECK(path.deg[3] == 2);
    CHECK(path.deg[4] == 1);
    CHECK(path.pool.size() == 6);

    config.initial = InitialGraph::star;
    TreeState star = init_state(config);
    CHECK(star.deg[1] == 3);
    CHECK(star.deg[2] == 1);
    CHECK(star.deg[3] == 1);
    CHECK(star.deg[4] == 1);

    config.initial = InitialGraph::edges;
    config.edges = {{1, 2}, {1, 3}, {3, 4}};
    TreeState custom = init_state(config);
    CHECK(custom.deg[1] == 2);
    CHECK(custom.deg[2] == 1);
    CHECK(custom.deg[3] == 2);
    CHECK(custom.deg[4] == 1);
}

TEST_CASE("configuration validation rejects malformed requests") {
    PaConfig config;
    config.tau0 = 1;
    config.horizon = 5;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config.tau0 = 4;
    config.horizon = 3;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config.horizon = 100;
    config.snapshot_times = {10, 10};
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.snapshot_times = {10, 200};
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.snapshot_times = {3};  // below tau0
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.snapshot_times = {4, 10, 100};
    CHECK_NOTHROW(config.validate());

    config.watch = {5};  // not a seed vertex
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.watch = {1, 4};
    CHECK_NOTHROW(config.validate());

    // A cyclic seed edge list must be refused even though it has tau0 - 1
    // entries (vertex 4 would be isolated).
    config.watch.clear();
    config.initial = InitialGraph::edges;
    config.edges = {{1, 2}, {2, 3}, {1, 3}};
    CHECK_THROWS_AS(init_state(config), ConfigError);
}

TEST_CASE("log-spaced snapshot schedule is sane") {
    const auto times = log_spaced_times(4, 100000, 10);
    REQUIRE(!times.empty());
    CHECK(times.front() == 4);
    CHECK(times.back() == 100000);
    CHECK(times.size() <= 10);
    for (std::size_t i = 1; i < times.size(); ++i) {
        CHECK(times[i] > times[i - 1]);
    }
    // Degenerate requests come back empty instead of throwing.
    CHECK(log_spaced_times(4, 3, 10).empty());
    CHECK(log_spaced_times(4, 100, 0).empty());
}

TEST_CASE("attachment targets follow the degree-proportional law") {
    // Star on 4 vertices: the hub holds 3 of the 6 pool slots, each leaf 1.
    PaConfig config;
    config.tau0 = 4;
    config.initial = InitialGraph::star;
    config.horizon = 5;
    const TreeState initial = init_state(config);

    Rng rng(0x1234567890ABCDEFull);
    constexpr int kDraws = 1'000'000;
    std::vector<std::int64_t> observed(5, 0);
    for (int i = 0; i < kDraws; ++i) {
        TreeState state = initial;
        const AttachEvent ev = attach_step(state, rng);
        observed[ev.target] += 1;
    }

    const double expected[] = {0.0, kDraws / 2.0, kDraws / 6.0, kDraws / 6.0,
                               kDraws / 6.0};
    const double hub_freq = static_cast<double>(observed[1]) / kDraws;
    CHECK(hub_freq == doctest::Approx(0.5).epsilon(0.004));

    double chi_sq = 0.0;
    for (int v = 1; v <= 4; ++v) {
        const double diff = static_cast<double>(observed[v]) - expected[v];
        chi_sq += diff * diff / expected[v];
    }
    boost::math::chi_squared_distribution<double> dist(3);
    const double critical = boost::math::quantile(dist, 0.999);
    INFO("chi-square " << chi_sq << " vs 99.9% critical " << critical);
    CHECK(chi_sq < critical);
}

TEST_CASE("two-vertex start always yields the three-vertex path") {
    PaConfig config;
    config.tau0 = 2;
    config.horizon = 3;
    config.snapshot_times = {3};
    for (std::uint64_t seed = 0; seed < 32; ++seed) {
        Rng rng(seed);
        const RunResult run = run_trajectory(config, rng);
        REQUIRE(run.trajectory.censuses.size() == 1);
        const DegreeCensus& census = run.trajectory.censuses[0];
        CHECK(census.t == 3);
        CHECK(census.count(1) == 2);
        CHECK(census.count(2) == 1);
        CHECK(census.max_degree == 2);
    }
}

TEST_CASE("identical seeds reproduce a trajectory bit for bit") {
    PaConfig config;
    config.tau0 = 4;
    config.horizon = 5000;
    config.snapshot_times = log_spaced_times(4, 5000, 5);
    config.watch = {1, 2};

    RunOptions options;
    options.record_events = true;

    Rng rng_a(42), rng_b(42), rng_c(43);
    const RunResult a = run_trajectory(config, rng_a, options);
    const RunResult b = run_trajectory(config, rng_b, options);
    const RunResult c = run_trajectory(config, rng_c, options);

    CHECK(a.trajectory.targets == b.trajectory.targets);
    CHECK(a.trajectory.targets != c.trajectory.targets);
    REQUIRE(a.trajectory.watch.size() == 2);
    CHECK(a.trajectory.watch[0].degrees == b.trajectory.watch[0].degrees);
    REQUIRE(a.trajectory.censuses.size() == b.trajectory.censuses.size());
    for (std::size_t i = 0; i < a.trajectory.censuses.size(); ++i) {
        CHECK(a.trajectory.censuses[i].counts ==
              b.trajectory.censuses[i].counts);
    }
}

TEST_CASE("run seeds derived per index are stable and distinct") {
    CHECK(derive_run_seed(7, 0) == derive_run_seed(7, 0));
    CHECK(derive_run_seed(7, 0) != derive_run_seed(7, 1));
    CHECK(derive_run_seed(7, 0) != derive_run_seed(8, 0));
    // Nearby indices must not collide (the whole point of the mixer).
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seeds.push_back(derive_run_seed(0, i));
    }
    std::sort(seeds.begin(), seeds.end());
    CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("long run keeps every structural invariant") {
    PaConfig config;
    config.tau0 = 4;
    config.initial = InitialGraph::path;
    config.horizon = 1'000'000;
    config.snapshot_times = log_spaced_times(4, 1'000'000, 8);
    config.master_seed = 99;

    Rng rng(config.master_seed);
    RunOptions options;
    options.keep_state = true;
    const RunResult run = run_trajectory(config, rng, options);

    for (const DegreeCensus& census : run.trajectory.censuses) {
        CHECK_NOTHROW(census.check_tree_invariants());
    }

    const TreeState& state = run.state;
    CHECK(state.t == config.horizon);
    CHECK(state.deg.size() == static_cast<std::size_t>(config.horizon) + 1);
    CHECK(state.pool.size() == 2 * static_cast<std::size_t>(config.horizon - 1));
    CHECK(state.parent.size() ==
          static_cast<std::size_t>(config.horizon - config.tau0));

    // The final snapshot must agree with a from-scratch recount.
    const DegreeCensus recount = state_census(state);
    const DegreeCensus& last = run.trajectory.censuses.back();
    CHECK(last.t == recount.t);
    CHECK(last.counts == recount.counts);
    CHECK(last.max_degree == recount.max_degree);
}
