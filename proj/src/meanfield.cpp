#include "patree/meanfield.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

namespace patree {

double closed_form_d(std::int64_t ell, double t) {
    const double l = static_cast<double>(ell);
    return 4.0 * t / (l * (l + 1.0) * (l + 2.0));
}

double closed_form_u(std::int64_t ell, double t) {
    const double l = static_cast<double>(ell);
    return 2.0 * t / (l * (l + 1.0));
}

MeanFieldTable recurrence_table(const DegreeCensus& initial, std::int64_t ell0,
                                std::int64_t horizon, Denominator convention) {
    if (horizon < initial.t) throw ConfigError("horizon before initial time");
    MeanFieldTable table;
    table.tau0 = initial.t;
    table.horizon = horizon;
    table.ell0 = ell0;
    table.convention = convention;
    table.values.reserve(
        static_cast<std::size_t>((horizon - initial.t + 1) * ell0));
    iterate_recurrence(
        census_row<double>(initial, ell0), initial.t, horizon, convention,
        [&table](std::int64_t, const std::vector<double>& row) {
            table.values.insert(table.values.end(), row.begin(), row.end());
        });
    return table;
}

namespace {

void envelope_scan(std::int64_t tau0, std::int64_t t,
                   const std::vector<double>& row,
                   ProfileEnvelopeReport& report) {
    const double envelope =
        std::pow(static_cast<double>(tau0), 1.5) /
        std::sqrt(static_cast<double>(t));
    for (std::size_t i = 0; i < row.size(); ++i) {
        const auto ell = static_cast<std::int64_t>(i) + 1;
        const double gap =
            std::fabs(row[i] - closed_form_d(ell, static_cast<double>(t)));
        const double ratio = gap / envelope;
        ++report.cells;
        if (gap > envelope) ++report.violations;
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.worst_t = t;
            report.worst_ell = ell;
        }
    }
}

}  // namespace

ProfileEnvelopeReport profile_envelope_check(const DegreeCensus& initial,
                                             std::int64_t ell0,
                                             std::int64_t horizon) {
    ProfileEnvelopeReport report;
    iterate_recurrence(census_row<double>(initial, ell0), initial.t, horizon,
                       Denominator::paper,
                       [&](std::int64_t t, const std::vector<double>& row) {
                           envelope_scan(initial.t, t, row, report);
                       });
    return report;
}

ProfileEnvelopeReport profile_envelope_check(const MeanFieldTable& table,
                                             const DegreeCensus& initial) {
    if (table.convention != Denominator::paper) {
        throw ConfigError("the profile envelope applies to the paper-convention table");
    }
    if (table.tau0 != initial.t) {
        throw ConfigError("table and census start at different times");
    }
    ProfileEnvelopeReport report;
    std::vector<double> row(static_cast<std::size_t>(table.ell0));
    for (std::int64_t t = table.tau0; t <= table.horizon; ++t) {
        for (std::int64_t ell = 1; ell <= table.ell0; ++ell) {
            row[static_cast<std::size_t>(ell - 1)] = table.at(t, ell);
        }
        envelope_scan(table.tau0, t, row, report);
    }
    return report;
}

double truncated_mass_identity_error(const DegreeCensus& initial,
                                     std::int64_t ell0, std::int64_t horizon,
                                     Denominator convention) {
    double worst = 0.0;
    double prev_sum = 0.0;
    double prev_top = 0.0;
    bool have_prev = false;
    iterate_recurrence(
        census_row<double>(initial, ell0), initial.t, horizon, convention,
        [&](std::int64_t t, const std::vector<double>& row) {
            double sum = 0.0;
            for (double v : row) sum += v;
            if (have_prev) {
                const double den = convention == Denominator::paper
                                       ? 2.0 * static_cast<double>(t - 1)
                                       : 2.0 * static_cast<double>(t - 2);
                const double expected =
                    prev_sum + 1.0 -
                    static_cast<double>(ell0) * prev_top / den;
                const double scale = std::max(1.0, std::fabs(expected));
                worst = std::max(worst, std::fabs(sum - expected) / scale);
            }
            prev_sum = sum;
            prev_top = row.back();
            have_prev = true;
        });
    return worst;
}

ExpectedDegreeSeries expected_degree_x(double m0, std::int64_t tau0,
                                       std::int64_t horizon) {
    if (tau0 < 2) throw ConfigError("tau0 must be at least 2");
    if (m0 < 1.0) throw ConfigError("m0 must be at least 1");
    if (horizon < tau0) throw ConfigError("horizon before tau0");

    ExpectedDegreeSeries series;
    series.tau0 = tau0;
    series.horizon = horizon;
    series.m0 = m0;
    series.x.reserve(static_cast<std::size_t>(horizon - tau0) + 1);
    series.brackets_checked = tau0 >= 4;
    series.brackets_ok = series.brackets_checked;

    double x = m0;
    for (std::int64_t t = tau0; t <= horizon; ++t) {
        if (t > tau0) {
            // Step from t-1 to t scales by (1 + 1/(2(t-2))).
            x *= 1.0 + 1.0 / (2.0 * static_cast<double>(t - 2));
        }
        series.x.push_back(x);
        if (series.brackets_checked) {
            const double lower =
                m0 * std::sqrt(static_cast<double>(t - 1) /
                               static_cast<double>(tau0 - 1));
            const double upper =
                m0 * std::sqrt(static_cast<double>(t - 2) /
                               static_cast<double>(tau0 - 2));
            const double cap = 1.25 * lower;
            const double tol = 1e-12 * std::max(1.0, x);
            if (x < lower - tol || x > upper + tol || upper > cap + tol) {
                series.brackets_ok = false;
            }
            const double slack =
                std::max(std::fabs(x - lower), std::fabs(upper - x)) /
                std::max(1.0, x);
            if (slack > series.max_rel_slack) series.max_rel_slack = slack;
        }
    }
    return series;
}

double psi_floor_count_bound(std::int64_t tau0) {
    const double lt = std::log(static_cast<double>(tau0));
    return 1e5 * std::sqrt(static_cast<double>(tau0 - 1)) * lt * lt * lt;
}

double psi_floor_tail_bound(std::int64_t tau0) {
    return std::max(static_cast<double>(tau0), psi_floor_count_bound(tau0));
}

double deviation_bound_count(std::int64_t ell, double t, double psi,
                             std::int64_t tau0) {
    const double floor = psi_floor_count_bound(tau0);
    if (psi < floor) {
        throw ConfigError(
            "psi below the count-bound floor 1e5*sqrt(tau0-1)*ln^3(tau0) = " +
            std::to_string(floor) + " for tau0 = " + std::to_string(tau0));
    }
    const double l = static_cast<double>(ell);
    const double lp = std::log(psi * t);
    return 120.0 * std::sqrt(t * lp / (l * l * l)) + 301.0 * psi * psi * lp;
}

double deviation_bound_tail(std::int64_t ell, double t, double psi,
                            std::int64_t tau0) {
    if (ell < 2) throw ConfigError("the tail bound needs ell >= 2");
    const double floor = psi_floor_tail_bound(tau0);
    if (psi < floor) {
        throw ConfigError(
            "psi below the tail-bound floor max(tau0, 1e5*sqrt(tau0-1)*ln^3(tau0)) = " +
            std::to_string(floor) + " for tau0 = " + std::to_string(tau0));
    }
    const double l = static_cast<double>(ell);
    const double lp = std::log(psi * t);
    const double lp7 = lp * lp * lp * lp * lp * lp * lp;
    return 45.0 * std::sqrt(t * lp) / l + 4e9 * psi * lp7;
}

std::string meanfield_csv(const DegreeCensus& initial, std::int64_t ell0,
                          std::int64_t horizon,
                          const std::vector<std::int64_t>& times) {
    std::string out = "t,ell,d_paper,d_exact,closed_form,lemma_dt_bound\n";
    if (times.empty()) return out;

    std::vector<std::vector<double>> paper_kept;
    std::vector<std::vector<double>> exact_kept;
    auto keep_if_requested = [&times](std::int64_t t,
                                      const std::vector<double>& row,
                                      std::vector<std::vector<double>>& kept,
                                      std::size_t& cursor) {
        if (cursor < times.size() && times[cursor] == t) {
            kept.push_back(row);
            ++cursor;
        }
    };
    std::size_t cursor_paper = 0;
    std::size_t cursor_exact = 0;
    iterate_recurrence(census_row<double>(initial, ell0), initial.t, horizon,
                       Denominator::paper,
                       [&](std::int64_t t, const std::vector<double>& row) {
                           keep_if_requested(t, row, paper_kept, cursor_paper);
                       });
    iterate_recurrence(census_row<double>(initial, ell0), initial.t, horizon,
                       Denominator::exact,
                       [&](std::int64_t t, const std::vector<double>& row) {
                           keep_if_requested(t, row, exact_kept, cursor_exact);
                       });

    char buf[192];
    for (std::size_t i = 0; i < paper_kept.size(); ++i) {
        const std::int64_t t = times[i];
        const double envelope = std::pow(static_cast<double>(initial.t), 1.5) /
                                std::sqrt(static_cast<double>(t));
        for (std::int64_t ell = 1; ell <= ell0; ++ell) {
            const auto j = static_cast<std::size_t>(ell - 1);
            std::snprintf(buf, sizeof(buf),
                          "%" PRId64 ",%" PRId64 ",%.17g,%.17g,%.17g,%.17g\n",
                          t, ell, paper_kept[i][j], exact_kept[i][j],
                          closed_form_d(ell, static_cast<double>(t)), envelope);
            out += buf;
        }
    }
    return out;
}

}  // namespace patree
