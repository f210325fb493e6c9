#include "patree/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace patree {

void PaConfig::validate() const {
    if (tau0 < 2) throw ConfigError("tau0 must be at least 2");
    if (horizon < tau0) throw ConfigError("horizon must be at least tau0");
    if (horizon >= (std::int64_t{1} << 32)) {
        throw ConfigError("horizon above 2^32 - 1 is not supported");
    }
    if (initial == InitialGraph::edges) {
        if (static_cast<std::int64_t>(edges.size()) != tau0 - 1) {
            throw ConfigError("an explicit seed tree needs exactly tau0 - 1 edges");
        }
        for (const auto& [a, b] : edges) {
            if (a < 1 || b < 1 || a > tau0 || b > tau0 || a == b) {
                throw ConfigError("seed edge endpoints must be distinct vertices in {1..tau0}");
            }
        }
    }
    std::int64_t prev = tau0 - 1;
    for (std::int64_t s : snapshot_times) {
        if (s <= prev) throw ConfigError("snapshot times must be strictly increasing and >= tau0");
        if (s > horizon) throw ConfigError("snapshot time beyond the horizon");
        prev = s;
    }
    for (std::uint32_t v : watch) {
        if (v < 1 || static_cast<std::int64_t>(v) > tau0) {
            throw ConfigError("watched vertices must belong to the seed tree");
        }
    }
}

std::vector<std::int64_t> log_spaced_times(std::int64_t tau0,
                                           std::int64_t horizon, int count) {
    std::vector<std::int64_t> times;
    if (count <= 0 || horizon < tau0) return times;
    const double lo = std::log(static_cast<double>(tau0));
    const double hi = std::log(static_cast<double>(horizon));
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
        auto t = static_cast<std::int64_t>(std::llround(std::exp(lo + f * (hi - lo))));
        t = std::clamp(t, tau0, horizon);
        if (times.empty() || t > times.back()) times.push_back(t);
    }
    return times;
}

TreeState init_state(const PaConfig& config) {
    config.validate();
    TreeState state;
    state.tau0 = config.tau0;
    state.t = config.tau0;

    const auto horizon = static_cast<std::size_t>(config.horizon);
    state.deg.reserve(horizon + 1);
    state.pool.reserve(2 * (horizon - 1));
    state.parent.reserve(horizon - static_cast<std::size_t>(config.tau0));

    state.deg.assign(static_cast<std::size_t>(config.tau0) + 1, 0);
    auto add_edge = [&state](std::uint32_t a, std::uint32_t b) {
        state.deg[a] += 1;
        state.deg[b] += 1;
        state.pool.push_back(a);
        state.pool.push_back(b);
    };
    switch (config.initial) {
        case InitialGraph::path:
            for (std::int64_t v = 1; v < config.tau0; ++v) {
                add_edge(static_cast<std::uint32_t>(v),
                         static_cast<std::uint32_t>(v + 1));
            }
            break;
        case InitialGraph::star:
            for (std::int64_t v = 2; v <= config.tau0; ++v) {
                add_edge(1, static_cast<std::uint32_t>(v));
            }
            break;
        case InitialGraph::edges: {
            // Must be a tree on {1..tau0}: connected with tau0 - 1 edges.
            std::vector<std::uint32_t> root(static_cast<std::size_t>(config.tau0) + 1);
            for (std::size_t v = 0; v < root.size(); ++v) {
                root[v] = static_cast<std::uint32_t>(v);
            }
            auto find = [&root](std::uint32_t v) {
                while (root[v] != v) {
                    root[v] = root[root[v]];
                    v = root[v];
                }
                return v;
            };
            for (const auto& [a, b] : config.edges) {
                const std::uint32_t ra = find(a);
                const std::uint32_t rb = find(b);
                if (ra == rb) {
                    throw ConfigError("seed edges contain a cycle; a tree is required");
                }
                root[ra] = rb;
                add_edge(a, b);
            }
            break;
        }
    }
    return state;
}

DegreeCensus state_census(const TreeState& state) {
    DegreeCensus census;
    census.t = state.t;
    for (std::size_t v = 1; v < state.deg.size(); ++v) {
        census.counts[state.deg[v]] += 1;
        if (state.deg[v] > census.max_degree) census.max_degree = state.deg[v];
    }
    return census;
}

RunResult run_trajectory(const PaConfig& config, Rng& rng,
                         const RunOptions& options) {
    RunResult result;
    TreeState state = init_state(config);

    Trajectory& traj = result.trajectory;
    traj.tau0 = config.tau0;
    traj.horizon = config.horizon;

    // Censuses are materialized lazily: the per-step observer only tallies
    // the target's pre-step degree and each snapshot replays the cumulative
    // tally on top of the seed census.
    const DegreeCensus base = state_census(state);
    AttachmentTally tally;

    traj.watch.reserve(config.watch.size());
    const std::size_t trace_len =
        static_cast<std::size_t>(config.horizon - config.tau0) + 1;
    for (std::uint32_t v : config.watch) {
        WatchTrace trace;
        trace.vertex = v;
        trace.degrees.reserve(trace_len);
        trace.degrees.push_back(state.deg[v]);
        traj.watch.push_back(std::move(trace));
    }
    if (options.record_events) {
        traj.targets.reserve(static_cast<std::size_t>(config.horizon - config.tau0));
    }

    std::size_t next_snap = 0;
    const auto& snaps = config.snapshot_times;
    while (next_snap < snaps.size() && snaps[next_snap] <= state.t) {
        traj.censuses.push_back(tally.apply_to(base));
        ++next_snap;
    }

    // The run advances segment by segment between snapshot boundaries, so
    // the per-step work never includes a snapshot-time comparison.  When
    // nothing but the census is observed the tally recorder is the whole
    // observer.
    const AttachmentTally::Recorder record(tally);
    const bool census_only = traj.watch.empty() && !options.record_events;
    while (state.t < config.horizon) {
        const std::int64_t stop =
            next_snap < snaps.size() ? snaps[next_snap] : config.horizon;
        if (census_only) {
            run_steps(state, stop, rng,
                      [record](std::int64_t, std::uint32_t,
                               std::uint32_t old_deg) { record(old_deg); });
        } else {
            run_steps(state, stop, rng,
                      [&](std::int64_t, std::uint32_t target,
                          std::uint32_t old_deg) {
                          record(old_deg);
                          for (auto& trace : traj.watch) {
                              trace.degrees.push_back(
                                  state.deg[trace.vertex]);
                          }
                          if (options.record_events) {
                              traj.targets.push_back(target);
                          }
                      });
        }
        if (next_snap < snaps.size() && state.t == snaps[next_snap]) {
            traj.censuses.push_back(tally.apply_to(base));
            ++next_snap;
        }
    }

    if (options.keep_state) result.state = std::move(state);
    return result;
}

}  // namespace patree
