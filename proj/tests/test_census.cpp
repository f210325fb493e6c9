#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>

#include "patree/census.hpp"
#include "patree/rng.hpp"
#include "patree/sampler.hpp"

using namespace patree;

namespace {

DegreeCensus path_census(std::int64_t n) {
    DegreeCensus census;
    census.t = n;
    census.counts[1] = 2;
    if (n > 2) census.counts[2] = n - 2;
    census.max_degree = n > 2 ? 2 : 1;
    return census;
}

}  // namespace

TEST_CASE("tail counts telescope back to the per-degree counts") {
    // A caterpillar on 10 vertices: two degree-4 hubs bridged by two
    // degree-2 vertices, six leaves.  Degree sum 18 = 2(t-1).
    DegreeCensus census;
    census.t = 10;
    census.counts = {{1, 6}, {2, 2}, {4, 2}};
    census.max_degree = 4;
    census.check_tree_invariants();

    CHECK(tail_census(census, 1) == census.t);
    for (std::int64_t ell = 1; ell <= 5; ++ell) {
        CHECK(tail_census(census, ell) - tail_census(census, ell + 1) ==
              census.count(ell));
    }
    CHECK(tail_census(census, 2) == 4);
    CHECK(tail_census(census, 5) == 0);
}

TEST_CASE("tree invariants catch forged censuses") {
    DegreeCensus good = path_census(6);
    CHECK_NOTHROW(good.check_tree_invariants());
    CHECK(good.vertex_total() == 6);
    CHECK(good.degree_total() == 10);

    DegreeCensus bad_vertices = good;
    bad_vertices.counts[1] += 1;  // 7 vertices claimed on a 6-vertex tree
    CHECK_THROWS_AS(bad_vertices.check_tree_invariants(), ConsistencyError);

    DegreeCensus bad_degrees = good;
    bad_degrees.counts[1] -= 1;
    bad_degrees.counts[3] += 1;  // vertex count right, degree sum off
    CHECK_THROWS_AS(bad_degrees.check_tree_invariants(), ConsistencyError);
}

TEST_CASE("applying an attachment moves one vertex up a class") {
    DegreeCensus census = path_census(5);
    apply_event(census, 2);
    CHECK(census.t == 6);
    CHECK(census.count(1) == 3);
    CHECK(census.count(2) == 2);
    CHECK(census.count(3) == 1);
    CHECK(census.max_degree == 3);
    CHECK_NOTHROW(census.check_tree_invariants());

    // Attaching to an empty degree class is inconsistent with the census.
    CHECK_THROWS_AS(apply_event(census, 9), ConsistencyError);
}

TEST_CASE("incremental tracker matches a full recount along a random run") {
    PaConfig config;
    config.tau0 = 3;
    config.horizon = 10'000;
    TreeState state = init_state(config);

    LiveCensus live;
    live.reset(state_census(state));

    Rng rng(2024);
    run_steps(state, config.horizon, rng,
              [&](std::int64_t, std::uint32_t, std::uint32_t old_deg) {
                  live.record_attachment(old_deg);
              });

    const DegreeCensus recount = state_census(state);
    const DegreeCensus tracked = live.snapshot();
    CHECK(live.t() == state.t);
    CHECK(tracked.t == recount.t);
    CHECK(tracked.counts == recount.counts);
    CHECK(tracked.max_degree == recount.max_degree);
    CHECK(live.max_degree() == recount.max_degree);

    // Spot-check the tail identity on the tracked snapshot.
    CHECK(tail_census(tracked, 1) == state.t);
    for (std::int64_t ell = 1; ell <= tracked.max_degree; ++ell) {
        CHECK(tail_census(tracked, ell) >= tail_census(tracked, ell + 1));
    }
}

TEST_CASE("live tracker spills degrees above the dense window") {
    // Drive one vertex past kDenseDegrees by hand and make sure counting
    // still works across the dense/spill boundary.
    LiveCensus live;
    DegreeCensus start;
    start.t = 2;
    start.counts = {{1, 2}};
    start.max_degree = 1;
    live.reset(start);

    const std::int64_t target = LiveCensus::kDenseDegrees + 40;
    for (std::int64_t d = 1; d < target; ++d) {
        live.record_attachment(static_cast<std::uint32_t>(d));
    }
    CHECK(live.max_degree() == target);
    CHECK(live.count(target) == 1);
    CHECK(live.count(target - 1) == 0);
    CHECK(live.count(1) == live.t() - 1);

    const DegreeCensus snap = live.snapshot();
    CHECK(snap.count(target) == 1);
    CHECK_NOTHROW(snap.check_tree_invariants());
}

TEST_CASE("attachment tally materializes the census a full recount gives") {
    PaConfig config;
    config.tau0 = 3;
    config.horizon = 20'000;
    config.master_seed = 77;
    TreeState state = init_state(config);

    const DegreeCensus base = state_census(state);
    AttachmentTally tally;
    const AttachmentTally::Recorder record(tally);

    Rng rng(config.master_seed);
    for (const std::int64_t checkpoint : {5, 1'000, 7'777, 20'000}) {
        run_steps(state, checkpoint, rng,
                  [record](std::int64_t, std::uint32_t,
                           std::uint32_t old_deg) { record(old_deg); });
        const DegreeCensus got = tally.apply_to(base);
        const DegreeCensus want = state_census(state);
        CHECK(got.t == want.t);
        CHECK(got.max_degree == want.max_degree);
        CHECK(got.counts == want.counts);
        CHECK_NOTHROW(got.check_tree_invariants());
    }
    CHECK(tally.steps() == config.horizon - config.tau0);
}

TEST_CASE("attachment tally follows a hub past the dense window") {
    // Star on 1300 vertices: the hub sits above kDenseDegrees from the
    // start, so every recorded hit lands in the spill map.
    DegreeCensus base;
    base.t = 1'300;
    base.counts = {{1, 1'299}, {1'299, 1}};
    base.max_degree = 1'299;
    base.check_tree_invariants();

    AttachmentTally tally;
    tally.record_attachment(1'299);
    tally.record_attachment(1'300);
    tally.record_attachment(1'301);

    const DegreeCensus got = tally.apply_to(base);
    CHECK(got.t == 1'303);
    CHECK(got.max_degree == 1'302);
    CHECK(got.count(1) == 1'302);
    CHECK(got.count(1'302) == 1);
    CHECK(got.count(1'299) == 0);
    CHECK(got.count(1'301) == 0);
    CHECK_NOTHROW(got.check_tree_invariants());
    CHECK(tally.steps() == 3);
}

TEST_CASE("attachment tally rejects a base census it cannot extend") {
    DegreeCensus base = path_census(4);
    AttachmentTally tally;
    tally.record_attachment(5);  // the path has no degree-5 vertex
    CHECK_THROWS_AS(tally.apply_to(base), ConsistencyError);
}

TEST_CASE("csv emission prints integer counts exactly") {
    const DegreeCensus census = path_census(5);

    std::string counts = census_csv_header();
    append_census_csv(counts, census);
    CHECK(counts == "t,ell,count\n5,1,2\n5,2,3\n");

    std::string tails = tail_csv_header();
    append_tail_csv(tails, census);
    CHECK(tails == "t,ell,tail\n5,1,5\n5,2,3\n");
}
