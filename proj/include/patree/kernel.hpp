#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patree/errors.hpp"
#include "patree/oracle.hpp"

// Hitting kernel of the single-vertex degree chain, pinned to a target time
// tau.  With ell fixed, a_j(s) is the probability that a vertex of degree
// ell - j at time s reaches degree exactly ell at time tau - 1, under the
// shifted step rule (jump probability d/(2s) at the step indexed s; see
// DegreeStepConvention::shifted).  The grid obeys the backward recurrence
//   a_j(s-1) = ((ell-j)/(2s)) a_{j-1}(s) + (1 - (ell-j)/(2s)) a_j(s),
// started from a_j(tau-1) = [j == 0], with a_{-1} identically 0.
//
// The continuous surrogate is f_j(s) = binom(ell-1, j) (1-v)^j v^{ell-j}
// with v = sqrt(s/(tau-1)); e_j(s) = f_j(s) - a_j(s) is the surrogate error,
// bounded in three regimes (for ell >= 8):
//   main    s > (tau-1)/ell^2 or j <= ell-2:    |e| <= 2200 ell/(tau-1)
//   mid     (tau-1)/ell^3 < s <= (tau-1)/ell^2: |e| <= 800 ell^{3/2}/(tau-1)
//   trivial s <= (tau-1)/ell^3:                 |e| <= 1.

namespace patree {

template <class Real>
struct HittingGridT {
    std::int64_t ell = 0;
    std::int64_t tau0 = 0;
    std::int64_t tau = 0;
    // True when some backward step has coefficient (ell-j)/(2s) > 1; the
    // grid is then a formal solution of the recurrence, not a probability
    // table (possible only when a grid time is below ell/2).
    bool outside_probabilistic_regime = false;
    std::vector<Real> values;  // column-major: [(s - tau0) * ell + j]

    const Real& at(std::int64_t j, std::int64_t s) const {
        return values[static_cast<std::size_t>((s - tau0) * ell + j)];
    }
    Real& at(std::int64_t j, std::int64_t s) {
        return values[static_cast<std::size_t>((s - tau0) * ell + j)];
    }
};

using HittingGrid = HittingGridT<double>;

// Backward sweep over s in [tau0, tau-1], j in [0, ell-1].
template <class Real>
HittingGridT<Real> hitting_grid_t(std::int64_t ell, std::int64_t tau0,
                                  std::int64_t tau) {
    if (ell < 1) throw ConfigError("ell must be at least 1");
    if (tau0 < 2 || tau - 1 < tau0) {
        throw ConfigError("need 2 <= tau0 <= tau - 1 for a hitting grid");
    }
    HittingGridT<Real> grid;
    grid.ell = ell;
    grid.tau0 = tau0;
    grid.tau = tau;
    grid.values.assign(static_cast<std::size_t>((tau - tau0) * ell), Real(0));
    grid.at(0, tau - 1) = Real(1);
    for (std::int64_t s = tau - 1; s > tau0; --s) {
        for (std::int64_t j = 0; j < ell; ++j) {
            const Real c = Real(ell - j) / Real(2 * s);
            if (c > Real(1)) grid.outside_probabilistic_regime = true;
            Real lower = j > 0 ? grid.at(j - 1, s) : Real(0);
            grid.at(j, s - 1) =
                c * lower + (Real(1) - c) * grid.at(j, s);
        }
    }
    return grid;
}

HittingGrid hitting_grid(std::int64_t ell, std::int64_t tau0, std::int64_t tau);

// a_0(s) = prod_{w=s+1}^{tau-1} (1 - ell/(2w)), the no-jump probability.
double hitting_no_jump(std::int64_t ell, std::int64_t s, std::int64_t tau);

inline constexpr std::int64_t kAlternatingCap = 40;      // 80-bit arithmetic
inline constexpr std::int64_t kAlternatingDiffCap = 12;  // double-precision formula

// Closed alternating-sum form of a_j(s); evaluated in 80-bit floating point
// and refused above kAlternatingCap, where cancellation swamps the result.
double hitting_alternating(std::int64_t ell, std::int64_t j, std::int64_t s,
                           std::int64_t tau);

// Alternating form of the difference a_{ell-k}(s) - a_{ell-k-1}(s) for
// 1 <= k <= ell-1 (cross-checking only; refused above kAlternatingDiffCap).
double hitting_diff_alternating(std::int64_t ell, std::int64_t k,
                                std::int64_t s, std::int64_t tau);

// f_j(s), its stable sibling f_j(s) - f_{j-1}(s), and d/ds f_j(s).
double continuous_kernel(std::int64_t ell, std::int64_t j, double s,
                         std::int64_t tau);
double continuous_kernel_diff(std::int64_t ell, std::int64_t j, double s,
                              std::int64_t tau);
double continuous_kernel_ds(std::int64_t ell, std::int64_t j, double s,
                            std::int64_t tau);

enum class ErrorRegime { main, mid, trivial };

struct ErrorBound {
    double bound = 0.0;
    ErrorRegime regime = ErrorRegime::main;
};

ErrorBound surrogate_error_bound(std::int64_t ell, std::int64_t j,
                                 std::int64_t s, std::int64_t tau);
const char* regime_name(ErrorRegime regime);

struct RegimeStats {
    std::int64_t cells = 0;
    std::int64_t violations = 0;
    double max_ratio = 0.0;
};

struct ErrorGridReport {
    RegimeStats main;
    RegimeStats mid;
    RegimeStats trivial;
    std::int64_t violations() const {
        return main.violations + mid.violations + trivial.violations;
    }
};

// Checks |f_j(s) - a_j(s)| against the three-regime bound on every cell.
// Requires ell >= 8 (the regime bounds are not claimed below that).
ErrorGridReport error_grid_check(const HittingGrid& grid);

// Exact value of I(ell, j, alpha) =
//   int_0^1 (1-v)^{2j-2} v^{2(ell-j)+alpha} (ell(1-v) - j)^2 dv,
// which reduces to ell^2/(2 ell + alpha + 1) at j = 0.  Needs
// 2(ell-j) + alpha >= 0 and j <= ell.
Rational beta_integral_exact(std::int64_t ell, std::int64_t j,
                             std::int64_t alpha);

// Same integral by adaptive Gauss-Kronrod quadrature.  Throws BudgetError
// when the error estimate fails the relative tolerance.
double beta_integral_quadrature(std::int64_t ell, std::int64_t j,
                                std::int64_t alpha, double rel_tol = 1e-10);

struct QSums {
    double q1 = 0.0;  // sum_s sum_k (1/k^2) (f_{ell-k} - f_{ell-k-1})^2
    double q2 = 0.0;  // sum_s sum_k (k/s)   (f_{ell-k} - f_{ell-k-1})^2
};

QSums q_sums(std::int64_t tau0, std::int64_t tau, std::int64_t ell);

struct QSumsReport {
    QSums sums;
    double q1_bound = 0.0;  // 4 + 100 (tau-1)/ell^3
    double q2_bound = 0.0;  // 9 psi^2
    bool applicable = false;  // 8 <= ell <= 2 psi sqrt(tau-1)
    bool ok = true;
};

// Validates psi >= 3 and checks the Q-sum bounds where they apply.
QSumsReport q_sums_check(std::int64_t tau0, std::int64_t tau, std::int64_t ell,
                         double psi);

struct PhiUpperReport {
    double value = 0.0;        // 2 sum a_{ell-1}^2 + 2 sum sum P (a diff)^2
    double no_jump_term = 0.0; // the 2 sum a_{ell-1}^2 part
    double envelope = 0.0;     // 1600 (tau-1)/ell^3 + (10 psi)^4 ln(psi tau)
    double ratio = 0.0;
    bool census_within_thresholds = true;
    bool ok = true;            // ratio <= 1 whenever the thresholds held
};

// Quadratic-characteristic upper bound along one trajectory.  counts[i][k-1]
// must hold D_s(k) for s = tau0 + i and k = 1..ell; max_degree[i] (optional,
// pass empty to skip) is the max degree at time s, used for the
// no-heavy-vertex part of the threshold test D_s(k) <= 5s/k^3 +
// 400 psi^2 ln(psi s), zero above psi sqrt(s-1).
PhiUpperReport phi_upper(const std::vector<std::vector<std::int64_t>>& counts,
                         const std::vector<std::int64_t>& max_degree,
                         std::int64_t ell, std::int64_t tau0, std::int64_t tau,
                         double psi);

struct CurvatureSample {
    std::int64_t j = 0;
    std::int64_t s = 0;
    double estimate = 0.0;
    double bound = 0.0;
};

struct CurvatureReport {
    std::vector<CurvatureSample> samples;
    std::int64_t violations = 0;
    double max_ratio = 0.0;
};

// Richardson-refined second differences of s -> f_j(s) against the
// curvature bound 140 (ell-1)^{5/2} / (s (tau-1) j^{3/2} (ell-j)^{1/2}) for
// 1 <= j <= ell-2 (also j = ell-1 when s > (tau-1)/ell^2), and
// ell^{3/2}/(s(tau-1)) for j = ell-1 on (tau-1)/ell^3 < s <= (tau-1)/ell^2.
// Samples about n_points deterministic (j, s) pairs.
CurvatureReport second_derivative_check(std::int64_t ell, std::int64_t tau0,
                                        std::int64_t tau, int n_points);

// CSV rows "ell,tau,j,s,a,f,e,ejs_bound,regime" over the whole grid.
std::string kernel_csv(const HittingGrid& grid);

}  // namespace patree
