#include "patree/kernel.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace patree {

namespace {

long double binom_ld(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0L;
    k = std::min(k, n - k);
    long double out = 1.0L;
    for (std::int64_t i = 1; i <= k; ++i) {
        out *= static_cast<long double>(n - k + i);
        out /= static_cast<long double>(i);
    }
    return out;
}

long double continuous_kernel_ld(std::int64_t ell, std::int64_t j,
                                 long double s, std::int64_t tau) {
    const long double v = sqrtl(s / static_cast<long double>(tau - 1));
    return binom_ld(ell - 1, j) * powl(1.0L - v, static_cast<long double>(j)) *
           powl(v, static_cast<long double>(ell - j));
}

// prod_{u=s+1}^{tau-1} (1 - i/(2u))
long double decay_product_ld(std::int64_t i, std::int64_t s, std::int64_t tau) {
    long double p = 1.0L;
    for (std::int64_t u = s + 1; u <= tau - 1; ++u) {
        p *= 1.0L - static_cast<long double>(i) /
                        static_cast<long double>(2 * u);
    }
    return p;
}

}  // namespace

HittingGrid hitting_grid(std::int64_t ell, std::int64_t tau0,
                         std::int64_t tau) {
    return hitting_grid_t<double>(ell, tau0, tau);
}

double hitting_no_jump(std::int64_t ell, std::int64_t s, std::int64_t tau) {
    return static_cast<double>(decay_product_ld(ell, s, tau));
}

double hitting_alternating(std::int64_t ell, std::int64_t j, std::int64_t s,
                           std::int64_t tau) {
    if (ell > kAlternatingCap) {
        throw ConfigError(
            "alternating hitting form refused above ell = " +
            std::to_string(kAlternatingCap) +
            ": binomial growth makes the cancellation catastrophic");
    }
    if (j < 0 || j >= ell) throw ConfigError("need 0 <= j <= ell - 1");
    if (s < 2 || s > tau - 1) throw ConfigError("need 2 <= s <= tau - 1");
    long double sum = 0.0L;
    for (std::int64_t i = ell - j; i <= ell; ++i) {
        const long double term = binom_ld(j, ell - i) *
                                 decay_product_ld(i, s, tau);
        sum += ((i - ell + j) % 2 == 0) ? term : -term;
    }
    return static_cast<double>(binom_ld(ell - 1, j) * sum);
}

double hitting_diff_alternating(std::int64_t ell, std::int64_t k,
                                std::int64_t s, std::int64_t tau) {
    if (ell > kAlternatingDiffCap) {
        throw ConfigError(
            "alternating difference form refused above ell = " +
            std::to_string(kAlternatingDiffCap));
    }
    if (k < 1 || k >= ell) throw ConfigError("need 1 <= k <= ell - 1");
    if (s < 2 || s > tau - 1) throw ConfigError("need 2 <= s <= tau - 1");
    long double sum = 0.0L;
    for (std::int64_t i = k; i <= ell; ++i) {
        const long double term = static_cast<long double>(i) *
                                 binom_ld(ell - k, i - k) *
                                 decay_product_ld(i, s, tau);
        sum += ((i - k) % 2 == 0) ? term : -term;
    }
    return static_cast<double>(binom_ld(ell - 1, k) * sum /
                               static_cast<long double>(ell - k));
}

double continuous_kernel(std::int64_t ell, std::int64_t j, double s,
                         std::int64_t tau) {
    if (j < 0 || j >= ell) throw ConfigError("need 0 <= j <= ell - 1");
    return static_cast<double>(
        continuous_kernel_ld(ell, j, static_cast<long double>(s), tau));
}

double continuous_kernel_diff(std::int64_t ell, std::int64_t j, double s,
                              std::int64_t tau) {
    if (j == 0) {
        return continuous_kernel(ell, 0, s, tau);  // f_{-1} is identically 0
    }
    if (j < 0 || j >= ell) throw ConfigError("need 0 <= j <= ell - 1");
    const long double v = sqrtl(static_cast<long double>(s) /
                                static_cast<long double>(tau - 1));
    const long double value =
        binom_ld(ell - 1, j) / static_cast<long double>(ell - j) *
        powl(1.0L - v, static_cast<long double>(j - 1)) *
        powl(v, static_cast<long double>(ell - j)) *
        (static_cast<long double>(ell) * (1.0L - v) -
         static_cast<long double>(j));
    return static_cast<double>(value);
}

double continuous_kernel_ds(std::int64_t ell, std::int64_t j, double s,
                            std::int64_t tau) {
    // f'_j(s) = ((ell-j)/(2s)) (f_j(s) - f_{j-1}(s)); expand the difference
    // through its stable closed form.
    return (static_cast<double>(ell - j) / (2.0 * s)) *
           continuous_kernel_diff(ell, j, s, tau);
}

ErrorBound surrogate_error_bound(std::int64_t ell, std::int64_t j,
                                 std::int64_t s, std::int64_t tau) {
    const double span = static_cast<double>(tau - 1);
    const double l = static_cast<double>(ell);
    ErrorBound out;
    if (s * ell * ell > tau - 1 || j <= ell - 2) {
        out.regime = ErrorRegime::main;
        out.bound = 2200.0 * l / span;
    } else if (s * ell * ell * ell > tau - 1) {
        out.regime = ErrorRegime::mid;
        out.bound = 800.0 * l * std::sqrt(l) / span;
    } else {
        out.regime = ErrorRegime::trivial;
        out.bound = 1.0;
    }
    return out;
}

const char* regime_name(ErrorRegime regime) {
    switch (regime) {
        case ErrorRegime::main: return "main";
        case ErrorRegime::mid: return "mid";
        case ErrorRegime::trivial: return "trivial";
    }
    return "?";
}

ErrorGridReport error_grid_check(const HittingGrid& grid) {
    if (grid.ell < 8) {
        throw ConfigError("the surrogate error bounds are claimed for ell >= 8");
    }
    ErrorGridReport report;
    for (std::int64_t s = grid.tau0; s <= grid.tau - 1; ++s) {
        for (std::int64_t j = 0; j < grid.ell; ++j) {
            const double f = continuous_kernel(grid.ell, j,
                                               static_cast<double>(s),
                                               grid.tau);
            const double e = f - grid.at(j, s);
            const ErrorBound eb =
                surrogate_error_bound(grid.ell, j, s, grid.tau);
            RegimeStats& stats = eb.regime == ErrorRegime::main
                                     ? report.main
                                     : eb.regime == ErrorRegime::mid
                                           ? report.mid
                                           : report.trivial;
            ++stats.cells;
            const double ratio = std::fabs(e) / eb.bound;
            if (std::fabs(e) > eb.bound) ++stats.violations;
            if (ratio > stats.max_ratio) stats.max_ratio = ratio;
        }
    }
    return report;
}

Rational beta_integral_exact(std::int64_t ell, std::int64_t j,
                             std::int64_t alpha) {
    if (j < 0 || j > ell || ell < 1) throw ConfigError("need 0 <= j <= ell");
    if (2 * (ell - j) + alpha < 0) {
        throw ConfigError("need 2(ell - j) + alpha >= 0");
    }
    using boost::multiprecision::cpp_int;
    if (j == 0) {
        return Rational(ell * ell, 2 * ell + alpha + 1);
    }
    auto factorial = [](std::int64_t n) {
        cpp_int f = 1;
        for (std::int64_t i = 2; i <= n; ++i) f *= i;
        return f;
    };
    const cpp_int num = factorial(2 * ell - 2 * j + alpha) *
                        factorial(2 * j - 2) *
                        (j * (2 * ell * (ell - j + 1) +
                              alpha * (j * (1 + alpha) + 2 * ell)));
    const cpp_int den = factorial(2 * ell + alpha + 1);
    return Rational(num, den);
}

double beta_integral_quadrature(std::int64_t ell, std::int64_t j,
                                std::int64_t alpha, double rel_tol) {
    if (j < 0 || j > ell || ell < 1) throw ConfigError("need 0 <= j <= ell");
    if (2 * (ell - j) + alpha < 0) {
        throw ConfigError("need 2(ell - j) + alpha >= 0");
    }
    const double l = static_cast<double>(ell);
    const double jd = static_cast<double>(j);
    const double vexp = static_cast<double>(2 * (ell - j) + alpha);
    auto integrand = [&](double v) {
        if (j == 0) {
            return l * l * std::pow(v, static_cast<double>(2 * ell + alpha));
        }
        const double linear = l * (1.0 - v) - jd;
        return std::pow(1.0 - v, static_cast<double>(2 * j - 2)) *
               std::pow(v, vexp) * linear * linear;
    };
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    double l1 = 0.0;
    const double value = gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, 1.0, 15, rel_tol / 8.0, &error, &l1);
    if (!(error <= rel_tol * std::max(std::fabs(value), 1e-300))) {
        throw BudgetError(
            "quadrature failed its tolerance: estimate " +
            std::to_string(value) + " with error estimate " +
            std::to_string(error));
    }
    return value;
}

QSums q_sums(std::int64_t tau0, std::int64_t tau, std::int64_t ell) {
    if (tau0 < 2 || tau - 1 < tau0) throw ConfigError("need 2 <= tau0 <= tau - 1");
    if (ell < 1) throw ConfigError("ell must be at least 1");
    QSums out;
    for (std::int64_t s = tau0; s <= tau - 1; ++s) {
        for (std::int64_t k = 1; k <= ell; ++k) {
            const double diff = continuous_kernel_diff(
                ell, ell - k, static_cast<double>(s), tau);
            const double sq = diff * diff;
            out.q1 += sq / (static_cast<double>(k) * static_cast<double>(k));
            out.q2 += sq * static_cast<double>(k) / static_cast<double>(s);
        }
    }
    return out;
}

QSumsReport q_sums_check(std::int64_t tau0, std::int64_t tau, std::int64_t ell,
                         double psi) {
    if (psi < 3.0) throw ConfigError("the Q-sum bounds need psi >= 3");
    QSumsReport report;
    report.sums = q_sums(tau0, tau, ell);
    const double span = static_cast<double>(tau - 1);
    const double l = static_cast<double>(ell);
    report.q1_bound = 4.0 + 100.0 * span / (l * l * l);
    report.q2_bound = 9.0 * psi * psi;
    report.applicable = ell >= 8 && l <= 2.0 * psi * std::sqrt(span);
    if (report.applicable) {
        report.ok = report.sums.q1 <= report.q1_bound &&
                    report.sums.q2 <= report.q2_bound;
    }
    return report;
}

PhiUpperReport phi_upper(const std::vector<std::vector<std::int64_t>>& counts,
                         const std::vector<std::int64_t>& max_degree,
                         std::int64_t ell, std::int64_t tau0, std::int64_t tau,
                         double psi) {
    if (static_cast<std::int64_t>(counts.size()) != tau - tau0) {
        throw ConfigError("need one census row per time in [tau0, tau-1]");
    }
    const HittingGrid grid = hitting_grid(ell, tau0, tau);
    PhiUpperReport report;
    for (std::int64_t s = tau0; s <= tau - 1; ++s) {
        const auto& row = counts[static_cast<std::size_t>(s - tau0)];
        if (static_cast<std::int64_t>(row.size()) < ell) {
            throw ConfigError("census rows must cover degrees 1..ell");
        }
        const double a_top = grid.at(ell - 1, s);
        report.no_jump_term += 2.0 * a_top * a_top;

        const double heavy_cut = psi * std::sqrt(static_cast<double>(s - 1));
        const double log_term =
            400.0 * psi * psi * std::log(psi * static_cast<double>(s));
        for (std::int64_t k = 1; k <= ell; ++k) {
            const auto count = row[static_cast<std::size_t>(k - 1)];
            if (static_cast<double>(k) <= heavy_cut) {
                const double cap =
                    5.0 * static_cast<double>(s) /
                        (static_cast<double>(k) * static_cast<double>(k) *
                         static_cast<double>(k)) +
                    log_term;
                if (static_cast<double>(count) > cap) {
                    report.census_within_thresholds = false;
                }
            } else if (count != 0) {
                report.census_within_thresholds = false;
            }
            if (count == 0) continue;
            const double p = static_cast<double>(k) *
                             static_cast<double>(count) /
                             (2.0 * static_cast<double>(s - 1));
            const double hi = grid.at(ell - k, s);
            const double lo = k <= ell - 1 ? grid.at(ell - k - 1, s) : 0.0;
            const double diff = hi - lo;
            report.value += 2.0 * p * diff * diff;
        }
        if (!max_degree.empty()) {
            const auto md = max_degree[static_cast<std::size_t>(s - tau0)];
            if (static_cast<double>(md) > heavy_cut) {
                report.census_within_thresholds = false;
            }
        }
    }
    report.value += report.no_jump_term;
    const double l = static_cast<double>(ell);
    report.envelope = 1600.0 * static_cast<double>(tau - 1) / (l * l * l) +
                      std::pow(10.0 * psi, 4.0) *
                          std::log(psi * static_cast<double>(tau));
    report.ratio = report.value / report.envelope;
    report.ok = !report.census_within_thresholds || report.ratio <= 1.0;
    return report;
}

namespace {

// a_{ell-k}(s) uses grid row ell-k; for k = ell that is row 0 and the lower
// neighbour a_{-1} is the zero function, handled at the call sites above.

long double second_difference(std::int64_t ell, std::int64_t j,
                              std::int64_t s, std::int64_t tau,
                              std::int64_t h) {
    const long double hi =
        continuous_kernel_ld(ell, j, static_cast<long double>(s + h), tau);
    const long double mid =
        continuous_kernel_ld(ell, j, static_cast<long double>(s), tau);
    const long double lo =
        continuous_kernel_ld(ell, j, static_cast<long double>(s - h), tau);
    return (hi - 2.0L * mid + lo) / static_cast<long double>(h * h);
}

}  // namespace

CurvatureReport second_derivative_check(std::int64_t ell, std::int64_t tau0,
                                        std::int64_t tau, int n_points) {
    if (ell < 3) throw ConfigError("curvature sampling needs ell >= 3");
    CurvatureReport report;
    const std::int64_t s_lo = std::max<std::int64_t>(tau0, 4);
    const std::int64_t s_hi = tau - 3;
    if (s_hi < s_lo + 1) throw ConfigError("tau too small for the 5-point stencil");

    // Deterministic sample: j spread over [1, ell-1], s log-spaced, plus a
    // few extra s values inside the alternate regime of j = ell-1.
    std::set<std::int64_t> js;
    const int want_j = std::max(4, n_points / 12);
    for (int i = 0; i < want_j; ++i) {
        const double f = want_j == 1 ? 0.0
                                     : static_cast<double>(i) / (want_j - 1);
        auto j = static_cast<std::int64_t>(
            std::llround(1.0 + f * static_cast<double>(ell - 2)));
        js.insert(std::clamp<std::int64_t>(j, 1, ell - 1));
    }
    js.insert(ell - 1);

    std::set<std::int64_t> ss;
    const int want_s =
        std::max(3, n_points / std::max(1, static_cast<int>(js.size())));
    const double log_lo = std::log(static_cast<double>(s_lo));
    const double log_hi = std::log(static_cast<double>(s_hi));
    for (int i = 0; i < want_s; ++i) {
        const double f = want_s == 1 ? 0.0
                                     : static_cast<double>(i) / (want_s - 1);
        auto s = static_cast<std::int64_t>(
            std::llround(std::exp(log_lo + f * (log_hi - log_lo))));
        ss.insert(std::clamp(s, s_lo, s_hi));
    }
    // Alternate-regime window for the top row.
    const std::int64_t mid_lo =
        std::max(s_lo, (tau - 1) / (ell * ell * ell) + 1);
    const std::int64_t mid_hi = std::min(s_hi, (tau - 1) / (ell * ell));
    for (std::int64_t s = mid_lo; s <= mid_hi && s < mid_lo + 3; ++s) {
        ss.insert(s);
    }

    const double span = static_cast<double>(tau - 1);
    const double l = static_cast<double>(ell);
    for (std::int64_t j : js) {
        for (std::int64_t s : ss) {
            double bound;
            if (j <= ell - 2 || s * ell * ell > tau - 1) {
                bound = 140.0 * std::pow(l - 1.0, 2.5) /
                        (static_cast<double>(s) * span *
                         std::pow(static_cast<double>(j), 1.5) *
                         std::sqrt(static_cast<double>(ell - j)));
            } else if (s * ell * ell * ell > tau - 1) {
                bound = l * std::sqrt(l) / (static_cast<double>(s) * span);
            } else {
                continue;  // no curvature claim this deep
            }
            const long double d1 = second_difference(ell, j, s, tau, 1);
            const long double d2 = second_difference(ell, j, s, tau, 2);
            const auto estimate =
                static_cast<double>((4.0L * d1 - d2) / 3.0L);
            CurvatureSample sample{j, s, estimate, bound};
            report.samples.push_back(sample);
            const double ratio = std::fabs(estimate) / bound;
            if (std::fabs(estimate) > bound) ++report.violations;
            if (ratio > report.max_ratio) report.max_ratio = ratio;
        }
    }
    return report;
}

std::string kernel_csv(const HittingGrid& grid) {
    std::string out = "ell,tau,j,s,a,f,e,ejs_bound,regime\n";
    char buf[224];
    for (std::int64_t s = grid.tau0; s <= grid.tau - 1; ++s) {
        for (std::int64_t j = 0; j < grid.ell; ++j) {
            const double a = grid.at(j, s);
            const double f = continuous_kernel(grid.ell, j,
                                               static_cast<double>(s),
                                               grid.tau);
            const ErrorBound eb =
                surrogate_error_bound(grid.ell, j, s, grid.tau);
            std::snprintf(buf, sizeof(buf),
                          "%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64
                          ",%.17g,%.17g,%.17g,%.17g,%s\n",
                          grid.ell, grid.tau, j, s, a, f, f - a, eb.bound,
                          regime_name(eb.regime));
            out += buf;
        }
    }
    return out;
}

}  // namespace patree
