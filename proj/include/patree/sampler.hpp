#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "patree/census.hpp"
#include "patree/errors.hpp"
#include "patree/rng.hpp"

// Exact simulator for the preferential attachment tree.  The process starts
// from a seed tree on tau0 >= 2 vertices; at each step t -> t+1 a new vertex
// t+1 attaches to an existing vertex chosen with probability proportional to
// its current degree.
//
// Degree-proportional sampling uses the endpoint pool: the flat list of the
// 2(t-1) edge endpoints.  A uniform index into the pool lands on vertex v
// with probability deg(v)/(2(t-1)), and an attachment appends exactly two
// entries, so each step is O(1) and nothing is ever rewritten.

namespace patree {

enum class InitialGraph { path, star, edges };

struct PaConfig {
    std::int64_t tau0 = 2;
    InitialGraph initial = InitialGraph::path;
    // Used when initial == edges: tau0-1 edges on vertices {1..tau0}.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::int64_t horizon = 2;
    std::uint64_t master_seed = 0;
    std::vector<std::int64_t> snapshot_times;  // strictly increasing
    std::vector<std::uint32_t> watch;          // vertices (<= tau0) to trace

    void validate() const;  // throws ConfigError
};

// Ten log-spaced times in [tau0, horizon] (default snapshot schedule).
std::vector<std::int64_t> log_spaced_times(std::int64_t tau0,
                                           std::int64_t horizon, int count);

struct AttachEvent {
    std::int64_t time;      // time after the step (the new vertex's id)
    std::uint32_t target;   // endpoint the new vertex attached to
};

struct TreeState {
    std::int64_t t = 0;
    std::vector<std::uint32_t> deg;     // deg[v] for v in {1..t}; deg[0] unused
    std::vector<std::uint32_t> pool;    // 2(t-1) edge endpoints
    std::vector<std::uint32_t> parent;  // parent[i] = target of vertex tau0+1+i
    std::int64_t tau0 = 0;

    // Bytes reserved by the three arrays (capacity, not size).
    std::size_t memory_footprint() const {
        return deg.capacity() * sizeof(std::uint32_t) +
               pool.capacity() * sizeof(std::uint32_t) +
               parent.capacity() * sizeof(std::uint32_t);
    }
};

// Builds the seed tree and reserves capacity through config.horizon.
TreeState init_state(const PaConfig& config);

// Degree census of the current state, built by a full scan.
DegreeCensus state_census(const TreeState& state);

// One attachment step.  Requires t >= 2 (nonempty pool).
inline AttachEvent attach_step(TreeState& state, Rng& rng) {
    const std::uint32_t idx = rng.below(static_cast<std::uint32_t>(state.pool.size()));
    const std::uint32_t target = state.pool[idx];
    const auto child = static_cast<std::uint32_t>(state.t + 1);
    state.deg[target] += 1;
    state.deg.push_back(1);
    state.pool.push_back(target);
    state.pool.push_back(child);
    state.parent.push_back(target);
    state.t += 1;
    return AttachEvent{state.t, target};
}

// Hot loop shared by every driver.  on_step(t_new, target, old_target_deg)
// is invoked after each attachment; pass a no-op lambda for a bare run.
template <class OnStep>
inline void run_steps(TreeState& state, std::int64_t t_end, Rng& rng,
                      OnStep&& on_step) {
    while (state.t < t_end) {
        const std::uint32_t idx =
            rng.below(static_cast<std::uint32_t>(state.pool.size()));
        const std::uint32_t target = state.pool[idx];
        const std::uint32_t old_deg = state.deg[target];
        const auto child = static_cast<std::uint32_t>(state.t + 1);
        state.deg[target] = old_deg + 1;
        state.deg.push_back(1);
        state.pool.push_back(target);
        state.pool.push_back(child);
        state.parent.push_back(target);
        state.t += 1;
        on_step(state.t, target, old_deg);
    }
}

struct WatchTrace {
    std::uint32_t vertex = 0;
    // degrees[i] = degree at time tau0 + i, for every time up to the horizon.
    std::vector<std::uint32_t> degrees;
};

struct Trajectory {
    std::int64_t tau0 = 0;
    std::int64_t horizon = 0;
    std::vector<DegreeCensus> censuses;   // one per snapshot time
    std::vector<WatchTrace> watch;
    std::vector<std::uint32_t> targets;   // attachment targets, if recorded
};

struct RunOptions {
    bool record_events = false;  // keep the per-step attachment targets
    bool keep_state = false;     // retain the final TreeState in the result
};

struct RunResult {
    Trajectory trajectory;
    TreeState state;  // populated when RunOptions::keep_state is set
};

// Full run: seeds the tree, walks to the horizon, maintains the census
// incrementally, and snapshots it at config.snapshot_times.
RunResult run_trajectory(const PaConfig& config, Rng& rng,
                         const RunOptions& options = {});

}  // namespace patree
