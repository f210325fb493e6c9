#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patree/census.hpp"
#include "patree/errors.hpp"

// Deterministic mean-field theory for the degree census.
//
// The one-step expectation recurrence, truncated at degree ell0, is
//   d_t(1)   = 1 + d_{t-1}(1) * (1 - 1/den)
//   d_t(ell) = d_{t-1}(ell) * (1 - ell/den)
//              + d_{t-1}(ell-1) * (ell-1)/den        (2 <= ell <= ell0)
// with two denominator conventions:
//   paper: den = 2(t-1), the classical display;
//   exact: den = 2(t-2), the degree sum of the pre-step tree on t-1
//          vertices, which makes d_t(ell) = E[D_t(ell)] exactly.
// The two agree as t grows; only `exact` matches the rational oracle.
// (For the smallest admissible start tau0 = 2, the first step targets t = 3
// and den = 2(t-2) = 2 = 2(tau0 - 1), the true degree sum at time tau0, so
// the exact convention never divides by zero.)
//
// The stationary profile is d_t(ell) ~ 4t / (ell(ell+1)(ell+2)) with tail
// u_t(ell) ~ 2t / (ell(ell+1)); the paper-convention iterate stays within
// tau0^{3/2}/sqrt(t) of the profile from any integer census start.

namespace patree {

enum class Denominator { paper, exact };

double closed_form_d(std::int64_t ell, double t);
double closed_form_u(std::int64_t ell, double t);

// Runs the truncated recurrence from initial_row (values for ell = 1..ell0
// at time tau0) through time horizon, invoking visit(t, row) for every t
// including tau0.  Real is double for production tables and an exact
// rational type for oracle comparisons.
template <class Real, class Visitor>
void iterate_recurrence(std::vector<Real> row, std::int64_t tau0,
                        std::int64_t horizon, Denominator convention,
                        Visitor&& visit) {
    const auto ell0 = static_cast<std::int64_t>(row.size());
    if (tau0 < 2) throw ConfigError("tau0 must be at least 2");
    if (ell0 < 1) throw ConfigError("ell0 must be at least 1");
    std::vector<Real> next(row.size());
    const std::vector<Real>& row_view = row;
    visit(tau0, row_view);
    for (std::int64_t t = tau0 + 1; t <= horizon; ++t) {
        const Real den = convention == Denominator::paper ? Real(2 * (t - 1))
                                                          : Real(2 * (t - 2));
        next[0] = Real(1) + row[0] * (Real(1) - Real(1) / den);
        for (std::int64_t ell = 2; ell <= ell0; ++ell) {
            const auto i = static_cast<std::size_t>(ell - 1);
            next[i] = row[i] * (Real(1) - Real(ell) / den) +
                      row[i - 1] * (Real(ell - 1) / den);
        }
        row.swap(next);
        visit(t, row_view);
    }
}

// Initial recurrence row taken from a census: row[ell-1] = D(ell).
template <class Real>
std::vector<Real> census_row(const DegreeCensus& census, std::int64_t ell0) {
    std::vector<Real> row(static_cast<std::size_t>(ell0), Real(0));
    for (const auto& [ell, c] : census.counts) {
        if (ell <= ell0) row[static_cast<std::size_t>(ell - 1)] = Real(c);
    }
    return row;
}

struct MeanFieldTable {
    std::int64_t tau0 = 0;
    std::int64_t horizon = 0;
    std::int64_t ell0 = 0;
    Denominator convention = Denominator::paper;
    std::vector<double> values;  // (horizon - tau0 + 1) x ell0, row-major

    double at(std::int64_t t, std::int64_t ell) const {
        return values[static_cast<std::size_t>((t - tau0) * ell0 + ell - 1)];
    }
};

// Materialized table (use the streaming iterate_recurrence for big grids).
MeanFieldTable recurrence_table(const DegreeCensus& initial, std::int64_t ell0,
                                std::int64_t horizon, Denominator convention);

struct ProfileEnvelopeReport {
    std::int64_t cells = 0;
    std::int64_t violations = 0;
    double max_ratio = 0.0;  // max over cells of |d - profile| / envelope
    std::int64_t worst_t = 0;
    std::int64_t worst_ell = 0;
};

// Checks |d_t(ell) - closed_form_d(ell, t)| <= tau0^{3/2}/sqrt(t) on every
// cell of the paper-convention recurrence started from `initial`.
ProfileEnvelopeReport profile_envelope_check(const DegreeCensus& initial,
                                             std::int64_t ell0,
                                             std::int64_t horizon);
ProfileEnvelopeReport profile_envelope_check(const MeanFieldTable& table,
                                             const DegreeCensus& initial);

// Largest violation of the truncated-mass identity
//   sum_ell d_t = sum_ell d_{t-1} + 1 - ell0 * d_{t-1}(ell0) / den
// over the run; should sit at rounding noise.
double truncated_mass_identity_error(const DegreeCensus& initial,
                                     std::int64_t ell0, std::int64_t horizon,
                                     Denominator convention);

struct ExpectedDegreeSeries {
    std::int64_t tau0 = 0;
    std::int64_t horizon = 0;
    double m0 = 0.0;
    std::vector<double> x;     // x[t - tau0], the expected-degree iterate
    bool brackets_checked = false;
    bool brackets_ok = false;  // sqrt brackets and the 5/4 comparison
    double max_rel_slack = 0.0;

    double at(std::int64_t t) const {
        return x[static_cast<std::size_t>(t - tau0)];
    }
};

// Iterates x_{t+1} = x_t (1 + 1/(2(t-1))) from x_{tau0} = m0 and, for
// tau0 >= 4, verifies the square-root brackets
//   m0 sqrt((t-1)/(tau0-1)) <= x_t <= m0 sqrt((t-2)/(tau0-2))
//                                  <= (5/4) m0 sqrt((t-1)/(tau0-1)).
ExpectedDegreeSeries expected_degree_x(double m0, std::int64_t tau0,
                                       std::int64_t horizon);

// Validity floors for the concentration-bound evaluators.
double psi_floor_count_bound(std::int64_t tau0);  // 1e5 sqrt(tau0-1) ln^3 tau0
double psi_floor_tail_bound(std::int64_t tau0);   // max(tau0, count floor)

// Deviation budget for |D_t(ell) - profile|:
//   120 sqrt(t ln(psi t) / ell^3) + 301 psi^2 ln(psi t).
// Throws ConfigError when psi is below psi_floor_count_bound(tau0).
double deviation_bound_count(std::int64_t ell, double t, double psi,
                             std::int64_t tau0);

// Deviation budget for |U_t(ell) - tail profile| (ell >= 2):
//   45 sqrt(t ln(psi t)) / ell + 4e9 psi ln^7(psi t).
// Throws ConfigError when psi < psi_floor_tail_bound(tau0) or ell < 2.
double deviation_bound_tail(std::int64_t ell, double t, double psi,
                            std::int64_t tau0);

// CSV rows "t,ell,d_paper,d_exact,closed_form,lemma_dt_bound" at the given
// times (all ell = 1..ell0 per time).
std::string meanfield_csv(const DegreeCensus& initial, std::int64_t ell0,
                          std::int64_t horizon,
                          const std::vector<std::int64_t>& times);

}  // namespace patree
