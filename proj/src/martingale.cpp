#include "patree/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

namespace patree {

namespace {

constexpr double kMaxTilt = 50.0;  // cap on |theta| * jump bound

double exact_phi(double theta, double up, double down) {
    // E[e^{theta dg} - 1 - theta dg] for increments in {-1, 0, +1}.
    return up * (std::expm1(theta) - theta) +
           down * (std::expm1(-theta) + theta);
}

}  // namespace

double MartingaleTrace::sup_abs_m() const {
    double best = 0.0;
    for (double v : m) best = std::max(best, std::abs(v));
    return best;
}

std::vector<double> MartingaleTrace::phi() const {
    std::vector<double> out(m2.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m2.size(); ++i) {
        acc += m2[i];
        out[i] = acc;
    }
    return out;
}

double MartingaleTrace::phi_final() const {
    double acc = 0.0;
    for (double v : m2) acc += v;
    return acc;
}

std::int64_t MartingaleTrace::budget_stop_time(double budget) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < m2.size(); ++i) {
        acc += m2[i];
        if (acc > budget) return tau0 + static_cast<std::int64_t>(i);
    }
    return tau + 1;
}

MartingaleTrace compensate(ChainAdapter& chain) {
    MartingaleTrace trace;
    trace.tau0 = chain.start_time();
    trace.tau = chain.end_time();
    trace.jump_bound = chain.jump_bound();
    if (trace.tau < trace.tau0)
        throw ConfigError("chain ends before it starts");

    const std::size_t steps = static_cast<std::size_t>(trace.tau - trace.tau0);
    trace.m.reserve(steps + 1);
    trace.m2.reserve(steps);
    trace.up.reserve(steps);
    trace.down.reserve(steps);

    double g_prev = chain.initial_value();
    double m = 0.0;
    trace.m.push_back(0.0);
    for (std::int64_t s = trace.tau0; s < trace.tau; ++s) {
        const StepMoments sm = chain.step(s);
        m += (sm.g_after - g_prev) - sm.drift;
        g_prev = sm.g_after;
        trace.m.push_back(m);
        trace.m2.push_back(sm.second_moment);
        trace.up.push_back(sm.up);
        trace.down.push_back(sm.down);
    }
    return trace;
}

std::vector<double> exp_supermartingale(const MartingaleTrace& trace,
                                        double theta) {
    if (std::abs(theta) * trace.jump_bound > kMaxTilt)
        throw BudgetError("tilt |theta| * J exceeds 50; exp would overflow");
    std::vector<double> z;
    z.reserve(trace.m.size());
    z.push_back(1.0);
    double phi_acc = 0.0;
    const double generic_factor =
        0.5 * theta * theta * std::exp(std::abs(theta) * trace.jump_bound);
    for (std::size_t i = 0; i < trace.m2.size(); ++i) {
        if (std::isnan(trace.up[i])) {
            phi_acc += generic_factor * trace.m2[i];
        } else {
            phi_acc += exact_phi(theta, trace.up[i], trace.down[i]);
        }
        z.push_back(std::exp(theta * trace.m[i + 1] - phi_acc));
    }
    return z;
}

KeyThreshold key_threshold(double omega, double R, double J) {
    if (!(omega > 0.0) || !(R > 0.0) || !(J > 0.0))
        throw ConfigError("key_threshold needs omega, R, J all positive");
    KeyThreshold out;
    out.delta = std::max(std::sqrt(omega * R), omega * J);
    out.bound = 2.0 * std::exp(-omega / 4.0);
    if (omega <= R / (J * J)) {
        out.tilt_case = 1;
        out.alpha = std::log(2.0) / J;
    } else {
        out.tilt_case = 2;
        out.alpha = std::log(2.0 * omega * J * J / R) / J;
    }
    return out;
}

namespace {

// First t in [lo, hi] with R(t) > threshold, assuming R nondecreasing;
// hi + 1 when none.
std::int64_t first_above(const std::function<double(std::int64_t)>& R,
                         std::int64_t lo, std::int64_t hi, double threshold) {
    if (!(R(hi) > threshold)) return hi + 1;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (R(mid) > threshold)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

void extend_by_doubling(const std::function<double(std::int64_t)>& R,
                        std::int64_t tau, SparseSchedule& sched) {
    while (sched.times.back() < tau) {
        const std::int64_t prev = sched.times.back();
        const std::int64_t next =
            first_above(R, prev + 1, tau, 4.0 * R(prev));
        sched.times.push_back(std::min(next, tau));
    }
}

}  // namespace

double sparse_delta_doubling(double omega, double J, double R_before) {
    return std::max(omega * J, 2.0 * std::sqrt(omega * R_before));
}

double sparse_delta_log(double psi, double J, double R_before) {
    const double flat = psi * J * std::log(psi * J * J);
    const double grow =
        R_before > 1.0 ? std::sqrt(psi * R_before * std::log(R_before)) : 0.0;
    return 2.0 * std::max(flat, grow);
}

SparseSchedule sparse_schedule_doubling(
    const std::function<double(std::int64_t)>& R, std::int64_t t_lo,
    std::int64_t tau, double omega, double J) {
    if (!(omega > 0.0) || !(J > 0.0))
        throw ConfigError("sparse schedule needs omega and J positive");
    if (t_lo > tau) throw ConfigError("sparse schedule needs t_lo <= tau");
    const double floor = omega * J * J;
    if (!(R(tau) > floor))
        throw ConfigError(
            "sparse schedule needs R(tau) > omega J^2; "
            "use key_threshold directly below that scale");

    SparseSchedule sched;
    sched.mode = ScheduleMode::doubling;
    sched.omega_or_psi = omega;
    sched.jump_bound = J;
    sched.times.push_back(first_above(R, t_lo, tau, floor));
    extend_by_doubling(R, tau, sched);
    sched.bound = 2.0 * std::log(8.0 * R(tau - 1) / floor) *
                  std::exp(-omega / 4.0);
    return sched;
}

SparseSchedule sparse_schedule_log(
    const std::function<double(std::int64_t)>& R, std::int64_t t_lo,
    std::int64_t tau, double psi, double J) {
    if (!(J > 0.0)) throw ConfigError("sparse schedule needs J positive");
    if (!(psi >= 4.0 / (J * J)))
        throw ConfigError("log-weighted schedule needs psi >= 4 / J^2");
    if (t_lo > tau) throw ConfigError("sparse schedule needs t_lo <= tau");
    const double floor = 2.0 * psi * J * J * std::log(psi * J * J);
    if (!(R(tau) > floor))
        throw ConfigError(
            "log-weighted schedule needs R(tau) > 2 psi J^2 ln(psi J^2)");

    SparseSchedule sched;
    sched.mode = ScheduleMode::log_weighted;
    sched.omega_or_psi = psi;
    sched.jump_bound = J;
    sched.times.push_back(first_above(R, t_lo, tau, floor));
    extend_by_doubling(R, tau, sched);
    sched.bound = 5.0 * std::exp(-psi / 4.0);
    return sched;
}

TailFrequency tail_frequency(const std::vector<RunExtremes>& runs,
                             double delta, double R, double prob_bound) {
    TailFrequency out;
    out.n_runs = static_cast<std::int64_t>(runs.size());
    for (const RunExtremes& r : runs) {
        if (r.sup_abs_m > delta && r.phi_final <= R) ++out.hits;
    }
    out.bound = prob_bound;
    if (out.n_runs == 0) {
        out.ok = false;
        return out;
    }
    out.frequency =
        static_cast<double>(out.hits) / static_cast<double>(out.n_runs);
    out.upper_confidence =
        boost::math::binomial_distribution<double>::find_upper_bound_on_p(
            static_cast<double>(out.n_runs), static_cast<double>(out.hits),
            0.01);
    out.ok = out.upper_confidence <= prob_bound;
    return out;
}

VertexDegreeChain::VertexDegreeChain(const TreeState& initial,
                                     const std::vector<std::uint32_t>& targets,
                                     std::uint32_t vertex)
    : targets_(targets), vertex_(vertex), tau0_(initial.t) {
    if (initial.t != static_cast<std::int64_t>(initial.tau0))
        throw ConfigError("vertex-degree chain expects the initial state");
    if (vertex < 1 || vertex > initial.tau0)
        throw ConfigError("watched vertex must belong to the initial tree");
    tau_ = tau0_ + static_cast<std::int64_t>(targets.size());
    m0_ = static_cast<double>(initial.deg[vertex]);
    degree_ = m0_;
}

StepMoments VertexDegreeChain::step(std::int64_t s) {
    if (s != tau0_ + static_cast<std::int64_t>(cursor_))
        throw ConsistencyError("vertex-degree chain stepped out of order");
    StepMoments sm;
    const double p = degree_ / (2.0 * static_cast<double>(s - 1));
    if (targets_[cursor_] == vertex_) degree_ += 1.0;
    ++cursor_;
    sm.g_after = degree_;
    sm.drift = p;
    sm.second_moment = p;  // the increment is an indicator
    sm.up = p;
    sm.down = 0.0;
    return sm;
}

CensusCountChain::CensusCountChain(const TreeState& initial,
                                   const std::vector<std::uint32_t>& targets,
                                   std::int64_t ell)
    : targets_(targets), ell_(ell), tau0_(initial.t) {
    if (ell < 1) throw ConfigError("census coordinate needs ell >= 1");
    if (initial.t != static_cast<std::int64_t>(initial.tau0))
        throw ConfigError("census-count chain expects the initial state");
    tau_ = tau0_ + static_cast<std::int64_t>(targets.size());
    degree_.assign(initial.deg.begin(),
                   initial.deg.begin() + initial.tau0 + 1);
    degree_.reserve(static_cast<std::size_t>(tau_) + 1);
    for (std::uint32_t v = 1; v <= initial.tau0; ++v) {
        const std::int64_t d = degree_[v];
        if (d == ell_) ++count_at_ell_;
        if (d == ell_ - 1) ++count_below_;
    }
    initial_count_ = static_cast<double>(count_at_ell_);
}

StepMoments CensusCountChain::step(std::int64_t s) {
    if (s != tau0_ + static_cast<std::int64_t>(cursor_))
        throw ConsistencyError("census-count chain stepped out of order");
    StepMoments sm;
    const double den = 2.0 * static_cast<double>(s - 1);
    if (ell_ == 1) {
        // The fresh vertex always lands in class 1; the chosen endpoint
        // leaves it when its degree was 1.
        const double p_leave = static_cast<double>(count_at_ell_) / den;
        sm.up = 1.0 - p_leave;
        sm.down = 0.0;
    } else {
        sm.up = static_cast<double>(ell_ - 1) *
                static_cast<double>(count_below_) / den;
        sm.down = static_cast<double>(ell_) *
                  static_cast<double>(count_at_ell_) / den;
    }
    sm.drift = sm.up - sm.down;
    sm.second_moment = sm.up + sm.down;

    const std::uint32_t target = targets_[cursor_];
    ++cursor_;
    const std::int64_t old_deg = degree_[target];
    degree_[target] = static_cast<std::uint32_t>(old_deg + 1);
    degree_.push_back(1);
    if (old_deg == ell_) --count_at_ell_;
    if (old_deg + 1 == ell_) ++count_at_ell_;
    if (old_deg == ell_ - 1) --count_below_;
    if (old_deg + 1 == ell_ - 1) ++count_below_;
    if (ell_ == 1) ++count_at_ell_;  // the fresh vertex
    if (ell_ == 2) ++count_below_;
    sm.g_after = static_cast<double>(count_at_ell_);
    return sm;
}

std::string martingale_csv_header() {
    return "run,t,M,Phi,Z,stopped_R,stopped_delta\n";
}

void append_martingale_csv(std::string& out, const MartingaleTrace& trace,
                           std::int64_t run_index, double theta, double R,
                           double delta,
                           const std::vector<std::int64_t>& times) {
    const std::vector<double> z = exp_supermartingale(trace, theta);
    char line[192];
    double phi_acc = 0.0;   // budget consumed strictly before the row time
    std::int64_t cursor = trace.tau0;
    bool stopped_r = false;
    bool stopped_delta = false;
    for (std::int64_t t : times) {
        if (t < trace.tau0 || t > trace.tau)
            throw ConfigError("csv time outside the trace window");
        while (cursor < t) {
            phi_acc += trace.m2[static_cast<std::size_t>(cursor - trace.tau0)];
            ++cursor;
        }
        const std::size_t i = static_cast<std::size_t>(t - trace.tau0);
        if (phi_acc > R) stopped_r = true;
        if (std::abs(trace.m[i]) > delta) stopped_delta = true;
        std::snprintf(line, sizeof(line),
                      "%lld,%lld,%.17g,%.17g,%.17g,%d,%d\n",
                      static_cast<long long>(run_index),
                      static_cast<long long>(t), trace.m[i], phi_acc, z[i],
                      stopped_r ? 1 : 0, stopped_delta ? 1 : 0);
        out += line;
    }
}

}  // namespace patree
