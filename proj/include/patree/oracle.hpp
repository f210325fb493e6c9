#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "patree/census.hpp"
#include "patree/errors.hpp"

// Exact distributional ground truth at tiny scale, in rational arithmetic.
// No floating point enters this module: every probability is a cpp_rational
// and serializes as "p/q".
//
// The census of the attachment process is itself a Markov chain: from census
// D at time s, a step moves to D + e_1 - e_k + e_{k+1} with probability
// k * D(k) / (2(s-1)).  Enumerating census vectors is exponential in the
// number of steps, so evolve_exact refuses horizons more than
// kMaxEvolveSteps past tau0.

namespace patree {

using Rational = boost::multiprecision::cpp_rational;

std::string rational_to_string(const Rational& r);

// Census vector: value[ell-1] = D(ell), trailing zeros trimmed.
using CensusVector = std::vector<std::int64_t>;

struct CensusDistribution {
    std::int64_t t = 0;
    std::map<CensusVector, Rational> probabilities;

    Rational total_probability() const;
    // E[D_t(ell)] under this distribution.
    Rational expected_count(std::int64_t ell) const;
    // E[U_t(ell)].
    Rational expected_tail(std::int64_t ell) const;
};

inline constexpr std::int64_t kMaxEvolveSteps = 9;

// Exact census distribution at every time in [initial.t, horizon].
// Refuses (BudgetError) when horizon - initial.t > kMaxEvolveSteps; the
// message carries a state-count estimate for the requested horizon.
std::vector<CensusDistribution> evolve_exact(const DegreeCensus& initial,
                                             std::int64_t horizon);

// Number of partitions of n (state-count estimates for error messages).
boost::multiprecision::cpp_int partition_count(std::int64_t n);

// Denominator conventions for the single-vertex degree chain.  At pre-step
// time u (the chain sits at time u and the step lands at u+1), a vertex of
// degree d jumps to d+1 with probability
//   process: d / (2(u-1))   -- the true attachment dynamics
//   shifted: d / (2(u+1))   -- the convention of the backward hitting
//                              recurrence, whose step indexed s uses 2s
enum class DegreeStepConvention { process, shifted };

inline constexpr std::int64_t kMaxHittingSteps = 9;

// P(X_{tau-1} = ell | X_s = k) for the pure-birth degree chain, exact.
// Refuses (BudgetError) when tau - 1 - s > kMaxHittingSteps.
Rational hitting_exact(std::int64_t ell, std::int64_t s, std::int64_t tau,
                       std::int64_t k, DegreeStepConvention convention);

// JSON emission ("p/q" strings throughout).
std::string oracle_report_json(const DegreeCensus& initial,
                               std::int64_t horizon);

}  // namespace patree
