#include "patree/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <new>
#include <thread>

#include <boost/math/distributions/binomial.hpp>
#include <json.hpp>

#include "patree/meanfield.hpp"

namespace patree {

namespace {

constexpr double kCrudeGrowthFloor = 1e5;  // m0 >= 1e5 omega^7 regime

// Compact per-run summary: per snapshot, counts for ell = 1..ell_max, the
// number of vertices above ell_max, and the maximum degree.
struct RunRecord {
    bool valid = false;
    std::vector<std::int64_t> cells;
    std::int32_t early_violations = 0;
    std::int32_t crude_violations = 0;
};

struct WatchState {
    std::uint32_t vertex = 0;
    double m0 = 0.0;
    double degree = 0.0;
    double envelope_sq = 0.0;  // (48 w^3 sqrt(m0 ln 2m0))^2 / (tau0 - 1)
    bool crude_applicable = false;
    double crude_sq = 0.0;  // 4 m0^2 / (tau0 - 1)
    bool violated = false;
    bool crude_violated = false;
};

RunRecord simulate_one(const EnsembleConfig& config, std::int64_t run_index) {
    const PaConfig& base = config.base;
    const std::size_t n_snaps = base.snapshot_times.size();
    const auto ell_max = static_cast<std::size_t>(config.ell_max);
    const std::size_t stride = ell_max + 2;

    RunRecord record;
    record.cells.assign(n_snaps * stride, 0);

    Rng rng(derive_run_seed(base.master_seed,
                            static_cast<std::uint64_t>(run_index)));
    TreeState state = init_state(base);
    LiveCensus census;
    census.reset(state_census(state));

    const bool watching = config.omega > 0.0 && !base.watch.empty();
    std::vector<WatchState> watch;
    if (watching) {
        const double w3 = config.omega * config.omega * config.omega;
        for (std::uint32_t v : base.watch) {
            WatchState ws;
            ws.vertex = v;
            ws.m0 = static_cast<double>(state.deg[v]);
            ws.degree = ws.m0;
            const double c =
                48.0 * w3 * std::sqrt(ws.m0 * std::log(2.0 * ws.m0));
            ws.envelope_sq = c * c / static_cast<double>(base.tau0 - 1);
            ws.crude_applicable =
                ws.m0 >= kCrudeGrowthFloor * w3 * w3 * config.omega;
            ws.crude_sq =
                4.0 * ws.m0 * ws.m0 / static_cast<double>(base.tau0 - 1);
            watch.push_back(ws);
        }
    }
    // Expected-degree multiplier q_t = prod_{s<t} (1 + 1/(2(s-1))), shared
    // by every watched vertex: x_t(v) = m0(v) q_t.
    double q = 1.0;

    std::size_t snap_cursor = 0;
    auto record_snapshot = [&](std::int64_t t) {
        const std::size_t at = snap_cursor * stride;
        std::int64_t seen = 0;
        for (std::size_t ell = 1; ell <= ell_max; ++ell) {
            const std::int64_t c = census.count(static_cast<std::int64_t>(ell));
            record.cells[at + ell - 1] = c;
            seen += c;
        }
        record.cells[at + ell_max] = t - seen;  // vertices above ell_max
        record.cells[at + ell_max + 1] = census.max_degree();
        ++snap_cursor;
    };
    std::int64_t next_snap = n_snaps == 0 ? -1 : base.snapshot_times[0];
    if (next_snap == base.tau0) {
        record_snapshot(base.tau0);
        next_snap = snap_cursor < n_snaps
                        ? base.snapshot_times[snap_cursor]
                        : -1;
    }

    run_steps(state, base.horizon, rng,
              [&](std::int64_t t_new, std::uint32_t target,
                  std::uint32_t old_deg) {
                  census.record_attachment(old_deg);
                  if (watching) {
                      q *= 1.0 + 0.5 / static_cast<double>(t_new - 2);
                      const auto tm1 = static_cast<double>(t_new - 1);
                      for (WatchState& ws : watch) {
                          if (target == ws.vertex) ws.degree += 1.0;
                          const double diff = ws.degree - ws.m0 * q;
                          if (diff * diff > ws.envelope_sq * tm1)
                              ws.violated = true;
                          if (ws.crude_applicable &&
                              ws.degree * ws.degree > ws.crude_sq * tm1)
                              ws.crude_violated = true;
                      }
                  }
                  if (t_new == next_snap) {
                      record_snapshot(t_new);
                      next_snap = snap_cursor < n_snaps
                                      ? base.snapshot_times[snap_cursor]
                                      : -1;
                  }
              });

    for (const WatchState& ws : watch) {
        if (ws.violated) ++record.early_violations;
        if (ws.crude_violated) ++record.crude_violations;
    }
    record.valid = true;
    return record;
}

struct SnapshotBounds {
    std::int64_t t = 0;
    std::vector<double> closed_d;    // ell = 1..ell_max
    std::vector<double> closed_u;    // ell = 1..ell_max
    std::vector<double> dev_d;       // deviation budget per ell
    std::vector<double> dev_u;       // ell >= 2; dev_u[0] unused
    std::vector<double> norm_d;      // sqrt(t ln(psi t) / ell^3)
    double norm_u_base = 0.0;        // sqrt(t ln(psi t))
    double max_degree_cap = 0.0;     // psi sqrt(t - 1)
};

std::vector<SnapshotBounds> precompute_bounds(const EnsembleConfig& config) {
    std::vector<SnapshotBounds> out;
    if (config.psi <= 0.0) return out;
    out.reserve(config.base.snapshot_times.size());
    for (std::int64_t t : config.base.snapshot_times) {
        SnapshotBounds b;
        b.t = t;
        const auto td = static_cast<double>(t);
        const double lt = std::log(config.psi * td);
        b.norm_u_base = std::sqrt(td * lt);
        b.max_degree_cap = config.psi * std::sqrt(td - 1.0);
        b.closed_d.resize(static_cast<std::size_t>(config.ell_max) + 1);
        b.closed_u.resize(b.closed_d.size());
        b.dev_d.resize(b.closed_d.size());
        b.dev_u.resize(b.closed_d.size());
        b.norm_d.resize(b.closed_d.size());
        for (std::int64_t ell = 1; ell <= config.ell_max; ++ell) {
            const auto i = static_cast<std::size_t>(ell);
            b.closed_d[i] = closed_form_d(ell, td);
            b.closed_u[i] = closed_form_u(ell, td);
            b.dev_d[i] =
                deviation_bound_count(ell, td, config.psi, config.base.tau0);
            if (ell >= 2) {
                b.dev_u[i] = deviation_bound_tail(ell, td, config.psi,
                                                  config.base.tau0);
            }
            b.norm_d[i] =
                std::sqrt(td * lt / static_cast<double>(ell * ell * ell));
        }
        out.push_back(std::move(b));
    }
    return out;
}

// Statistical verdict for "per-run failure probability <= bound": the check
// only fails when even the lower 99% confidence limit of the observed
// frequency exceeds the allowance, i.e. when the data falsify the bound.
bool compatible_with_bound(std::int64_t n, std::int64_t hits, double bound) {
    if (n <= 0 || hits <= 0) return true;
    const double lower =
        boost::math::binomial_distribution<double>::find_lower_bound_on_p(
            static_cast<double>(n), static_cast<double>(hits), 0.01);
    return lower <= bound;
}

char const* bool_str(bool b) { return b ? "yes" : "no"; }

}  // namespace

void EnsembleConfig::validate() const {
    base.validate();
    if (n_runs < 1) throw ConfigError("ensemble needs at least one run");
    if (threads < 0) throw ConfigError("thread count cannot be negative");
    if (ell_max < 1 || ell_max > LiveCensus::kDenseDegrees)
        throw ConfigError("ell_max must lie in [1, 1024]");
    if (mem_budget_bytes < (std::int64_t{1} << 20))
        throw ConfigError("memory budget under 1 MiB is not workable");
    if (psi > 0.0) {
        // Fails fast (ConfigError) when psi is below the validity floor.
        deviation_bound_count(1, static_cast<double>(base.horizon), psi,
                              base.tau0);
        deviation_bound_tail(2, static_cast<double>(base.horizon), psi,
                             base.tau0);
    }
    if (omega > 0.0 && omega < 4.0)
        throw ConfigError("watched-vertex envelopes need omega >= 4");
}

void MomentStats::add(std::int64_t v) {
    if (n == 0) {
        min = v;
        max = v;
    } else {
        min = std::min(min, v);
        max = std::max(max, v);
    }
    ++n;
    sum += v;
    const auto sq = static_cast<unsigned __int128>(
        static_cast<__int128>(v) * static_cast<__int128>(v));
    sum_sq += sq;
}

void MomentStats::merge(const MomentStats& other) {
    if (other.n == 0) return;
    if (n == 0) {
        *this = other;
        return;
    }
    min = std::min(min, other.min);
    max = std::max(max, other.max);
    n += other.n;
    sum += other.sum;
    sum_sq += other.sum_sq;
}

double MomentStats::mean() const {
    return n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n);
}

double MomentStats::variance() const {
    if (n <= 1) return 0.0;
    const auto nl = static_cast<long double>(n);
    const auto s = static_cast<long double>(sum);
    const auto sq = static_cast<long double>(sum_sq);
    const long double var = (sq - s * s / nl) / (nl - 1.0L);
    return var > 0.0L ? static_cast<double>(var) : 0.0;
}

const MomentStats& EnsembleReport::count_at(std::size_t snap_idx,
                                            std::int64_t ell) const {
    return count_stats[snap_idx * static_cast<std::size_t>(ell_max) +
                       static_cast<std::size_t>(ell - 1)];
}

const MomentStats& EnsembleReport::tail_at(std::size_t snap_idx,
                                           std::int64_t ell) const {
    return tail_stats[snap_idx * static_cast<std::size_t>(ell_max) +
                      static_cast<std::size_t>(ell - 1)];
}

EnsembleReport run_ensemble(const EnsembleConfig& config) {
    config.validate();
    const PaConfig& base = config.base;
    const std::size_t n_snaps = base.snapshot_times.size();
    const auto ell_max = static_cast<std::size_t>(config.ell_max);
    const std::size_t stride = ell_max + 2;

    EnsembleReport report;
    report.tau0 = base.tau0;
    report.horizon = base.horizon;
    report.n_runs = config.n_runs;
    report.master_seed = base.master_seed;
    report.ell_max = config.ell_max;
    report.psi = config.psi;
    report.omega = config.omega;
    report.snapshot_times = base.snapshot_times;
    report.watch = base.watch;
    report.count_stats.resize(n_snaps * ell_max);
    report.tail_stats.resize(n_snaps * ell_max);
    report.overflow_stats.resize(n_snaps);
    report.max_degree_stats.resize(n_snaps);
    {
        TreeState seed = init_state(base);
        for (std::uint32_t v : base.watch)
            report.watch_m0.push_back(seed.deg[v]);
    }

    // Workers pull run indices from a shared counter; every record lands in
    // its run's slot, so the fold below never sees scheduling order.
    std::vector<RunRecord> records(static_cast<std::size_t>(config.n_runs));
    {
        unsigned hw = std::thread::hardware_concurrency();
        if (hw == 0) hw = 1;
        std::int64_t workers =
            config.threads > 0 ? config.threads : static_cast<std::int64_t>(hw);
        const std::int64_t per_run_bytes =
            16 * base.horizon + (std::int64_t{1} << 20);
        workers = std::min(workers,
                           std::max<std::int64_t>(
                               1, config.mem_budget_bytes / per_run_bytes));
        workers = std::min(workers, config.n_runs);

        std::atomic<std::int64_t> next{0};
        auto work = [&] {
            for (;;) {
                const std::int64_t idx = next.fetch_add(1);
                if (idx >= config.n_runs) return;
                try {
                    records[static_cast<std::size_t>(idx)] =
                        simulate_one(config, idx);
                } catch (const std::bad_alloc&) {
                    // Leave the slot invalid; siblings keep running.
                    records[static_cast<std::size_t>(idx)].valid = false;
                }
            }
        };
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (std::int64_t w = 0; w < workers; ++w)
                pool.emplace_back(work);
            for (std::thread& th : pool) th.join();
        }
    }

    const std::vector<SnapshotBounds> bounds = precompute_bounds(config);

    // Sequential fold in run-index order.
    for (const RunRecord& record : records) {
        if (!record.valid) {
            ++report.runs_failed;
            continue;
        }
        ++report.runs_completed;
        bool count_bad = false;
        bool tail_bad = false;
        bool maxdeg_bad = false;
        for (std::size_t si = 0; si < n_snaps; ++si) {
            const std::size_t at = si * stride;
            const std::int64_t t = base.snapshot_times[si];
            std::int64_t below = 0;  // vertices of degree < ell
            for (std::size_t ell = 1; ell <= ell_max; ++ell) {
                const std::int64_t d = record.cells[at + ell - 1];
                const std::int64_t u = t - below;
                report.count_stats[si * ell_max + ell - 1].add(d);
                report.tail_stats[si * ell_max + ell - 1].add(u);
                below += d;
                if (!bounds.empty()) {
                    const SnapshotBounds& b = bounds[si];
                    const double dev =
                        std::abs(static_cast<double>(d) - b.closed_d[ell]);
                    report.count_norm_max = std::max(
                        report.count_norm_max, dev / b.norm_d[ell]);
                    if (dev > b.dev_d[ell]) count_bad = true;
                    if (ell >= 2) {
                        const double devu =
                            std::abs(static_cast<double>(u) - b.closed_u[ell]);
                        report.tail_norm_max = std::max(
                            report.tail_norm_max,
                            devu * static_cast<double>(ell) / b.norm_u_base);
                        if (devu > b.dev_u[ell]) tail_bad = true;
                    }
                }
            }
            const std::int64_t over = record.cells[at + ell_max];
            const std::int64_t maxdeg = record.cells[at + ell_max + 1];
            report.overflow_stats[si].add(over);
            report.max_degree_stats[si].add(maxdeg);
            if (!bounds.empty() &&
                static_cast<double>(maxdeg) > bounds[si].max_degree_cap)
                maxdeg_bad = true;
        }
        if (count_bad) ++report.count_dev_runs;
        if (tail_bad) ++report.tail_dev_runs;
        if (maxdeg_bad) ++report.max_degree_runs;
        if (record.early_violations > 0) ++report.early_envelope_runs;
        if (record.crude_violations > 0) ++report.crude_growth_runs;
    }
    if (config.omega > 0.0) {
        const double w = config.omega;
        bool any_crude = false;
        for (std::int64_t m0 : report.watch_m0) {
            if (static_cast<double>(m0) >=
                kCrudeGrowthFloor * w * w * w * w * w * w * w)
                any_crude = true;
        }
        if (any_crude) report.crude_growth_checked = report.runs_completed;
    }

    evaluate_checks(report);
    return report;
}

namespace {

CheckResult make_deviation_check(const char* name, std::int64_t checked,
                                 std::int64_t violating, double bound,
                                 double norm_max) {
    CheckResult r;
    r.name = name;
    r.checked_runs = checked;
    r.violating_runs = violating;
    r.bound = std::min(bound, 1.0);
    r.normalized_max = norm_max;
    r.ok = compatible_with_bound(checked, violating, r.bound);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%lld of %lld runs violated; allowance %.3g; compatible: %s",
                  static_cast<long long>(violating),
                  static_cast<long long>(checked), r.bound, bool_str(r.ok));
    r.detail = buf;
    return r;
}

}  // namespace

CheckResult check_count_concentration(EnsembleReport& report) {
    CheckResult r = make_deviation_check(
        "count-deviation", report.runs_completed, report.count_dev_runs,
        4.0 / report.psi, report.count_norm_max);
    report.checks.push_back(r);
    return r;
}

CheckResult check_tail_concentration(EnsembleReport& report) {
    CheckResult r = make_deviation_check(
        "tail-deviation", report.runs_completed, report.tail_dev_runs,
        4.0 / report.psi, report.tail_norm_max);
    report.checks.push_back(r);
    return r;
}

CheckResult check_max_degree(EnsembleReport& report) {
    const auto tau0 = static_cast<double>(report.tau0);
    const double theorem_prob =
        2.0 * tau0 *
        std::exp(-std::cbrt(report.psi) /
                 (3.0 * std::pow(tau0 - 1.0, 1.0 / 6.0)));
    CheckResult r = make_deviation_check(
        "max-degree-cap", report.runs_completed, report.max_degree_runs,
        std::min(theorem_prob, 1.0 / report.psi), 0.0);
    // Least-squares slope of ln mean(max degree) against ln t: square-root
    // growth shows up as 1/2.
    const std::size_t n = report.max_degree_stats.size();
    if (n >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x =
                std::log(static_cast<double>(report.snapshot_times[i]));
            const double y = std::log(report.max_degree_stats[i].mean());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const auto nd = static_cast<double>(n);
        r.statistic = (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "; growth exponent %.4f", r.statistic);
        r.detail += buf;
    }
    report.checks.push_back(r);
    return r;
}

CheckResult check_early_degrees(EnsembleReport& report) {
    CheckResult r = make_deviation_check(
        "early-degree-envelope", report.runs_completed,
        report.early_envelope_runs, 5.0 * std::exp(-report.omega / 4.0),
        0.0);
    report.checks.push_back(r);

    CheckResult crude;
    crude.name = "crude-growth-cap";
    crude.checked_runs = report.crude_growth_checked;
    crude.violating_runs = report.crude_growth_runs;
    crude.bound = std::min(1.0, std::exp(-5.0 * report.omega / 4.0));
    crude.ok = compatible_with_bound(crude.checked_runs, crude.violating_runs,
                                     crude.bound);
    crude.detail = crude.checked_runs == 0
                       ? "no watched vertex meets the seed-degree floor; "
                         "vacuous"
                       : "seed-degree floor met";
    report.checks.push_back(crude);
    return r;
}

void evaluate_checks(EnsembleReport& report) {
    report.checks.clear();
    if (report.psi > 0.0) {
        check_count_concentration(report);
        check_tail_concentration(report);
        check_max_degree(report);
    }
    if (report.omega > 0.0 && !report.watch.empty())
        check_early_degrees(report);
}

std::string ensemble_report_json(const EnsembleReport& report) {
    using json = nlohmann::ordered_json;
    json doc;
    doc["config"] = {{"tau0", report.tau0},
                     {"horizon", report.horizon},
                     {"master_seed", report.master_seed},
                     {"ell_max", report.ell_max},
                     {"psi", report.psi},
                     {"omega", report.omega},
                     {"snapshot_times", report.snapshot_times},
                     {"watch", report.watch}};
    doc["n_runs"] = report.n_runs;
    doc["runs_completed"] = report.runs_completed;
    doc["runs_failed"] = report.runs_failed;

    auto stats_row = [](std::int64_t t, std::int64_t ell,
                        const MomentStats& s) {
        json row = {{"t", t},
                    {"mean", s.mean()},
                    {"var", s.variance()},
                    {"min", s.min},
                    {"max", s.max}};
        if (ell > 0) row["ell"] = ell;
        return row;
    };

    json stats = json::array();
    json tails = json::array();
    for (std::size_t si = 0; si < report.snapshot_times.size(); ++si) {
        for (std::int64_t ell = 1; ell <= report.ell_max; ++ell) {
            stats.push_back(stats_row(report.snapshot_times[si], ell,
                                      report.count_at(si, ell)));
            tails.push_back(stats_row(report.snapshot_times[si], ell,
                                      report.tail_at(si, ell)));
        }
    }
    doc["stats"] = std::move(stats);
    doc["tail_stats"] = std::move(tails);

    json overflow = json::array();
    json maxdeg = json::array();
    for (std::size_t si = 0; si < report.snapshot_times.size(); ++si) {
        overflow.push_back(stats_row(report.snapshot_times[si], 0,
                                     report.overflow_stats[si]));
        maxdeg.push_back(stats_row(report.snapshot_times[si], 0,
                                   report.max_degree_stats[si]));
    }
    doc["overflow_stats"] = std::move(overflow);
    doc["max_degree_stats"] = std::move(maxdeg);

    json checks = json::array();
    for (const CheckResult& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"checked_runs", c.checked_runs},
                          {"violations", c.violating_runs},
                          {"bound", c.bound},
                          {"normalized_max", c.normalized_max},
                          {"statistic", c.statistic},
                          {"ok", c.ok},
                          {"detail", c.detail}});
    }
    doc["checks"] = std::move(checks);
    return doc.dump(2) + "\n";
}

DegreeMartingaleEnsemble run_degree_martingale_ensemble(
    const PaConfig& base, std::uint32_t vertex, std::int64_t n_runs,
    int threads) {
    base.validate();
    if (vertex < 1 || static_cast<std::int64_t>(vertex) > base.tau0)
        throw ConfigError("martingale vertex must belong to the seed tree");
    if (n_runs < 1) throw ConfigError("ensemble needs at least one run");

    DegreeMartingaleEnsemble out;
    out.tau0 = base.tau0;
    out.tau = base.horizon;
    out.vertex = vertex;
    {
        TreeState seed = init_state(base);
        out.m0 = seed.deg[vertex];
    }
    out.runs.assign(static_cast<std::size_t>(n_runs), RunExtremes{});

    std::atomic<std::int64_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::int64_t idx = next.fetch_add(1);
            if (idx >= n_runs) return;
            Rng rng(derive_run_seed(base.master_seed,
                                    static_cast<std::uint64_t>(idx)));
            TreeState state = init_state(base);
            double degree = state.deg[vertex];
            double m = 0.0;
            double phi = 0.0;
            double sup = 0.0;
            run_steps(state, base.horizon, rng,
                      [&](std::int64_t t_new, std::uint32_t target,
                          std::uint32_t) {
                          const double p =
                              degree / (2.0 * static_cast<double>(t_new - 2));
                          double dg = 0.0;
                          if (target == vertex) {
                              degree += 1.0;
                              dg = 1.0;
                          }
                          m += dg - p;
                          phi += p;
                          const double a = std::abs(m);
                          if (a > sup) sup = a;
                      });
            out.runs[static_cast<std::size_t>(idx)] = RunExtremes{sup, phi};
        }
    };
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::int64_t workers =
        std::min<std::int64_t>(threads > 0 ? threads : hw, n_runs);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (std::int64_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    return out;
}

}  // namespace patree
