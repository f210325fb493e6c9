#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "patree/errors.hpp"
#include "patree/sampler.hpp"

// Doob compensation along one observed trajectory.  For an observable g of
// a Markov chain X, with steps indexed by their pre-step time s,
//   M_t   = g(X_t) - g(X_{tau0}) - sum_{s < t} E[g(X_{s+1}) - g(X_s) | X_s]
//   Phi_t = sum_{s <= t} E[(g(X_{s+1}) - g(X_s))^2 | X_s]
// M is a martingale started at 0 and Phi is its predictable quadratic
// budget.  The exponential functional
//   Z_t(theta) = exp(theta M_t - sum_{s < t} phi_s(theta)),
//   phi_s(theta) = E[e^{theta dg} - 1 - theta dg | X_s],
// is a supermartingale, which is what turns a budget cap on Phi into a tail
// bound on sup |M|.

namespace patree {

struct StepMoments {
    double g_after = 0.0;
    double drift = 0.0;          // conditional mean of the g-increment
    double second_moment = 0.0;  // conditional mean of its square
    // Exact one-step law for counting observables: the increment is +1 with
    // probability up, -1 with probability down, 0 otherwise.  NaN marks an
    // adapter that only supplies moments.
    double up = std::numeric_limits<double>::quiet_NaN();
    double down = std::numeric_limits<double>::quiet_NaN();
};

// Streams one trajectory of one observable, step by step.
class ChainAdapter {
  public:
    virtual ~ChainAdapter() = default;
    virtual std::int64_t start_time() const = 0;
    virtual std::int64_t end_time() const = 0;
    virtual double initial_value() const = 0;
    virtual double jump_bound() const = 0;  // J: |g-increment| <= J always
    // Advances past the step with pre-step time s; s runs from start_time()
    // to end_time() - 1 in order.
    virtual StepMoments step(std::int64_t s) = 0;
};

struct MartingaleTrace {
    std::int64_t tau0 = 0;
    std::int64_t tau = 0;
    double jump_bound = 1.0;
    std::vector<double> m;         // m[i] = M at time tau0 + i
    std::vector<double> m2;        // per-step second moments
    std::vector<double> up;        // per-step exact one-step law (or NaN)
    std::vector<double> down;

    double sup_abs_m() const;
    // phi[i] = Phi at time tau0 + i, i < tau - tau0 (prefix sums of m2).
    std::vector<double> phi() const;
    double phi_final() const;
    // First t with Phi_t > budget, or tau + 1 when the budget never trips.
    std::int64_t budget_stop_time(double budget) const;
};

MartingaleTrace compensate(ChainAdapter& chain);

// Z_t(theta) for t = tau0..tau.  Uses the exact one-step law where the
// trace carries one, and the generic bound phi <= theta^2/2 e^{|theta| J} m2
// elsewhere (which only slackens the supermartingale property).  Refuses
// |theta| * J > 50 (overflow).
std::vector<double> exp_supermartingale(const MartingaleTrace& trace,
                                        double theta);

struct KeyThreshold {
    double delta = 0.0;   // max(sqrt(omega R), omega J)
    double bound = 0.0;   // 2 exp(-omega / 4)
    // Certificate used to reach the bound: tilt alpha and per-case delta.
    double alpha = 0.0;
    int tilt_case = 0;    // 1: omega <= R/J^2, 2: omega >= R/J^2
};

// Tail threshold for P(sup_{t <= tau} |M_t| > delta and Phi stays <= R).
KeyThreshold key_threshold(double omega, double R, double J);

enum class ScheduleMode { doubling, log_weighted };

struct SparseSchedule {
    ScheduleMode mode = ScheduleMode::doubling;
    std::vector<std::int64_t> times;  // stopping grid tau_1 < ... <= tau
    double bound = 0.0;               // whole-horizon probability bound
    double omega_or_psi = 0.0;
    double jump_bound = 1.0;
};

// Threshold profile delta(t) that the schedule certifies, evaluated from
// R(t-1).
double sparse_delta_doubling(double omega, double J, double R_before);
double sparse_delta_log(double psi, double J, double R_before);

// Doubling schedule: tau_1 = first t with R(t) > omega J^2, then
// tau_{j+1} = first t with R(t) > 4 R(tau_j), capped at tau.  R must be
// nondecreasing on [t_lo, tau] and R(tau) must exceed omega J^2.
// Certifies delta(t) = max(omega J, 2 sqrt(omega R(t-1))) with failure
// probability 2 ln(8 R(tau-1) / (omega J^2)) e^{-omega/4}.
SparseSchedule sparse_schedule_doubling(
    const std::function<double(std::int64_t)>& R, std::int64_t t_lo,
    std::int64_t tau, double omega, double J);

// Log-weighted schedule (needs psi >= 4/J^2): tau_1 = first t with
// R(t) > 2 psi J^2 ln(psi J^2), doubling steps as above.  Certifies
// delta(t) = 2 max(psi J ln(psi J^2), sqrt(psi R(t-1) ln R(t-1))) with
// failure probability 5 e^{-psi/4}.
SparseSchedule sparse_schedule_log(
    const std::function<double(std::int64_t)>& R, std::int64_t t_lo,
    std::int64_t tau, double psi, double J);

struct RunExtremes {
    double sup_abs_m = 0.0;
    double phi_final = 0.0;
};

struct TailFrequency {
    std::int64_t n_runs = 0;
    std::int64_t hits = 0;  // runs with sup|M| > delta and Phi_final <= R
    double frequency = 0.0;
    double upper_confidence = 0.0;  // one-sided 99% binomial upper limit
    double bound = 0.0;
    bool ok = false;  // upper_confidence <= bound
};

TailFrequency tail_frequency(const std::vector<RunExtremes>& runs,
                             double delta, double R, double prob_bound);

// Adapters for the two observables the harness studies.

// Degree of one seed vertex: drift X_s(v)/(2(s-1)), jumps in {0, +1}.
class VertexDegreeChain : public ChainAdapter {
  public:
    VertexDegreeChain(const TreeState& initial,
                      const std::vector<std::uint32_t>& targets,
                      std::uint32_t vertex);
    std::int64_t start_time() const override { return tau0_; }
    std::int64_t end_time() const override { return tau_; }
    double initial_value() const override { return m0_; }
    double jump_bound() const override { return 1.0; }
    StepMoments step(std::int64_t s) override;

  private:
    const std::vector<std::uint32_t>& targets_;
    std::uint32_t vertex_;
    std::int64_t tau0_;
    std::int64_t tau_;
    double m0_;
    double degree_;
    std::size_t cursor_ = 0;
};

// Census count D(ell): jumps in {-1, 0, +1} driven by the degree classes
// ell-1 and ell.
class CensusCountChain : public ChainAdapter {
  public:
    CensusCountChain(const TreeState& initial,
                     const std::vector<std::uint32_t>& targets,
                     std::int64_t ell);
    std::int64_t start_time() const override { return tau0_; }
    std::int64_t end_time() const override { return tau_; }
    double initial_value() const override { return initial_count_; }
    double jump_bound() const override { return 1.0; }
    StepMoments step(std::int64_t s) override;

  private:
    const std::vector<std::uint32_t>& targets_;
    std::int64_t ell_;
    std::int64_t tau0_;
    std::int64_t tau_;
    double initial_count_;
    std::vector<std::uint32_t> degree_;  // degree per vertex during replay
    std::int64_t count_at_ell_ = 0;
    std::int64_t count_below_ = 0;  // D(ell - 1), 0 when ell == 1
    std::size_t cursor_ = 0;
};

// CSV rows "run,t,M,Phi,Z,stopped_R,stopped_delta" for one trace at the
// given times.
std::string martingale_csv_header();
void append_martingale_csv(std::string& out, const MartingaleTrace& trace,
                           std::int64_t run_index, double theta, double R,
                           double delta,
                           const std::vector<std::int64_t>& times);

}  // namespace patree
