#include "patree/oracle.hpp"

#include <sstream>
#include <utility>

#include <json.hpp>

namespace patree {

std::string rational_to_string(const Rational& r) {
    std::ostringstream os;
    os << numerator(r) << "/" << denominator(r);
    return os.str();
}

Rational CensusDistribution::total_probability() const {
    Rational total = 0;
    for (const auto& [census, p] : probabilities) total += p;
    return total;
}

Rational CensusDistribution::expected_count(std::int64_t ell) const {
    Rational mean = 0;
    const auto idx = static_cast<std::size_t>(ell - 1);
    for (const auto& [census, p] : probabilities) {
        if (ell >= 1 && idx < census.size() && census[idx] != 0) {
            mean += p * census[idx];
        }
    }
    return mean;
}

Rational CensusDistribution::expected_tail(std::int64_t ell) const {
    Rational mean = 0;
    for (const auto& [census, p] : probabilities) {
        std::int64_t tail = 0;
        for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(ell, 1) - 1);
             i < census.size(); ++i) {
            tail += census[i];
        }
        if (tail != 0) mean += p * tail;
    }
    return mean;
}

boost::multiprecision::cpp_int partition_count(std::int64_t n) {
    if (n < 0) return 0;
    std::vector<boost::multiprecision::cpp_int> p(static_cast<std::size_t>(n) + 1, 0);
    p[0] = 1;
    for (std::int64_t part = 1; part <= n; ++part) {
        for (std::int64_t total = part; total <= n; ++total) {
            p[static_cast<std::size_t>(total)] +=
                p[static_cast<std::size_t>(total - part)];
        }
    }
    return p[static_cast<std::size_t>(n)];
}

namespace {

CensusVector census_to_vector(const DegreeCensus& census) {
    CensusVector v(static_cast<std::size_t>(census.max_degree), 0);
    for (const auto& [ell, c] : census.counts) {
        v[static_cast<std::size_t>(ell - 1)] = c;
    }
    return v;
}

}  // namespace

std::vector<CensusDistribution> evolve_exact(const DegreeCensus& initial,
                                             std::int64_t horizon) {
    initial.check_tree_invariants();
    if (horizon < initial.t) {
        throw ConfigError("horizon before the initial census time");
    }
    if (horizon - initial.t > kMaxEvolveSteps) {
        std::ostringstream os;
        os << "exact census evolution refused: " << (horizon - initial.t)
           << " steps exceed the budget of " << kMaxEvolveSteps
           << " (state space at t=" << horizon << " is on the order of "
           << partition_count(horizon - 2) << " census classes)";
        throw BudgetError(os.str());
    }

    std::vector<CensusDistribution> out;
    out.reserve(static_cast<std::size_t>(horizon - initial.t) + 1);
    CensusDistribution start;
    start.t = initial.t;
    start.probabilities.emplace(census_to_vector(initial), Rational(1));
    out.push_back(std::move(start));

    for (std::int64_t s = initial.t; s < horizon; ++s) {
        const Rational denom = 2 * (s - 1);
        const CensusDistribution& current = out.back();
        CensusDistribution next;
        next.t = s + 1;
        for (const auto& [census, p] : current.probabilities) {
            for (std::size_t i = 0; i < census.size(); ++i) {
                if (census[i] == 0) continue;
                const std::int64_t k = static_cast<std::int64_t>(i) + 1;
                const Rational step_p = p * Rational(k * census[i]) / denom;
                CensusVector moved = census;
                if (i + 2 > moved.size()) moved.resize(i + 2, 0);
                moved[i] -= 1;
                moved[i + 1] += 1;
                moved[0] += 1;
                next.probabilities[std::move(moved)] += step_p;
            }
        }
        out.push_back(std::move(next));
    }
    return out;
}

Rational hitting_exact(std::int64_t ell, std::int64_t s, std::int64_t tau,
                       std::int64_t k, DegreeStepConvention convention) {
    if (k < 1 || ell < 1) throw ConfigError("degrees must be positive");
    if (s < 2 || tau - 1 < s) {
        throw ConfigError("need 2 <= s <= tau - 1 for the degree chain");
    }
    const std::int64_t steps = tau - 1 - s;
    if (steps > kMaxHittingSteps) {
        std::ostringstream os;
        os << "exact hitting probability refused: " << steps
           << " steps exceed the budget of " << kMaxHittingSteps;
        throw BudgetError(os.str());
    }
    if (ell < k || ell > k + steps) return 0;

    // Forward sweep over the pure-birth chain: mass[d - k] is the
    // probability of sitting at degree d at pre-step time u.
    std::vector<Rational> mass(static_cast<std::size_t>(steps) + 1, Rational(0));
    mass[0] = 1;
    for (std::int64_t u = s; u < tau - 1; ++u) {
        const Rational denom = convention == DegreeStepConvention::process
                                   ? Rational(2 * (u - 1))
                                   : Rational(2 * (u + 1));
        for (std::int64_t d = u - s; d >= 0; --d) {
            const auto i = static_cast<std::size_t>(d);
            if (mass[i] == 0) continue;
            const Rational jump = Rational(k + d) / denom;
            mass[i + 1] += mass[i] * jump;
            mass[i] *= (1 - jump);
        }
    }
    return mass[static_cast<std::size_t>(ell - k)];
}

std::string oracle_report_json(const DegreeCensus& initial,
                               std::int64_t horizon) {
    const auto distributions = evolve_exact(initial, horizon);
    nlohmann::ordered_json report;
    report["t0"] = initial.t;
    report["horizon"] = horizon;
    report["times"] = nlohmann::ordered_json::array();
    for (const auto& dist : distributions) {
        nlohmann::ordered_json entry;
        entry["t"] = dist.t;
        entry["states"] = nlohmann::ordered_json::array();
        std::int64_t max_degree = 0;
        for (const auto& [census, p] : dist.probabilities) {
            nlohmann::ordered_json state;
            state["census"] = census;
            state["prob"] = rational_to_string(p);
            entry["states"].push_back(std::move(state));
            max_degree = std::max(max_degree,
                                  static_cast<std::int64_t>(census.size()));
        }
        nlohmann::ordered_json counts;
        nlohmann::ordered_json tails;
        for (std::int64_t ell = 1; ell <= max_degree; ++ell) {
            counts[std::to_string(ell)] =
                rational_to_string(dist.expected_count(ell));
            tails[std::to_string(ell)] =
                rational_to_string(dist.expected_tail(ell));
        }
        entry["expected_counts"] = std::move(counts);
        entry["expected_tails"] = std::move(tails);
        report["times"].push_back(std::move(entry));
    }
    return report.dump(2);
}

}  // namespace patree
