#include "patree/census.hpp"

#include <cinttypes>
#include <cstdio>

namespace patree {

std::int64_t DegreeCensus::vertex_total() const {
    std::int64_t n = 0;
    for (const auto& [ell, c] : counts) n += c;
    return n;
}

std::int64_t DegreeCensus::degree_total() const {
    std::int64_t n = 0;
    for (const auto& [ell, c] : counts) n += ell * c;
    return n;
}

void DegreeCensus::check_tree_invariants() const {
    if (vertex_total() != t) {
        throw ConsistencyError("census vertex count does not match t=" +
                               std::to_string(t));
    }
    if (degree_total() != 2 * (t - 1)) {
        throw ConsistencyError("census degree sum does not match 2(t-1), t=" +
                               std::to_string(t));
    }
}

std::int64_t tail_census(const DegreeCensus& census, std::int64_t ell) {
    std::int64_t tail = 0;
    for (auto it = census.counts.lower_bound(ell); it != census.counts.end();
         ++it) {
        tail += it->second;
    }
    return tail;
}

void apply_event(DegreeCensus& census, std::int64_t target_degree) {
    auto it = census.counts.find(target_degree);
    if (it == census.counts.end() || it->second <= 0) {
        throw ConsistencyError(
            "attachment target degree " + std::to_string(target_degree) +
            " has zero count in census at t=" + std::to_string(census.t));
    }
    if (--it->second == 0) census.counts.erase(it);
    census.counts[target_degree + 1] += 1;
    census.counts[1] += 1;
    census.t += 1;
    if (target_degree + 1 > census.max_degree) {
        census.max_degree = target_degree + 1;
    }
}

void LiveCensus::reset(const DegreeCensus& census) {
    dense_.assign(kDenseDegrees + 2, 0);
    spill_.clear();
    t_ = census.t;
    max_degree_ = census.max_degree;
    for (const auto& [ell, c] : census.counts) {
        if (ell <= kDenseDegrees) {
            dense_[static_cast<size_t>(ell)] = c;
        } else {
            spill_[ell] = c;
        }
    }
}

DegreeCensus LiveCensus::snapshot() const {
    DegreeCensus out;
    out.t = t_;
    out.max_degree = max_degree_;
    for (std::int64_t ell = 1; ell <= kDenseDegrees; ++ell) {
        if (dense_[static_cast<size_t>(ell)] != 0) {
            out.counts.emplace(ell, dense_[static_cast<size_t>(ell)]);
        }
    }
    for (const auto& [ell, c] : spill_) out.counts.emplace(ell, c);
    return out;
}

std::int64_t AttachmentTally::steps() const {
    std::int64_t n = 0;
    for (const std::int64_t hits : dense_) n += hits;
    for (const auto& [ell, hits] : spill_) n += hits;
    return n;
}

DegreeCensus AttachmentTally::apply_to(const DegreeCensus& base) const {
    DegreeCensus out = base;
    std::int64_t n = 0;
    const auto shift = [&out](std::int64_t ell, std::int64_t hits) {
        out.counts[ell] -= hits;
        out.counts[ell + 1] += hits;
    };
    for (std::int64_t ell = 0; ell <= kDenseDegrees; ++ell) {
        const std::int64_t hits = dense_[static_cast<size_t>(ell)];
        if (hits != 0) {
            shift(ell, hits);
            n += hits;
        }
    }
    for (const auto& [ell, hits] : spill_) {
        shift(ell, hits);
        n += hits;
    }
    out.counts[1] += n;
    out.t = base.t + n;
    out.max_degree = 0;
    for (auto it = out.counts.begin(); it != out.counts.end();) {
        if (it->second < 0) {
            throw ConsistencyError(
                "attachment tally moves degree class " +
                std::to_string(it->first) + " below zero at t=" +
                std::to_string(out.t) + "; tally does not fit the base census");
        }
        if (it->second == 0) {
            it = out.counts.erase(it);
        } else {
            out.max_degree = it->first;
            ++it;
        }
    }
    return out;
}

std::string census_csv_header() { return "t,ell,count\n"; }

void append_census_csv(std::string& out, const DegreeCensus& census) {
    char buf[96];
    for (const auto& [ell, c] : census.counts) {
        std::snprintf(buf, sizeof(buf),
                      "%" PRId64 ",%" PRId64 ",%" PRId64 "\n", census.t, ell,
                      c);
        out += buf;
    }
}

std::string tail_csv_header() { return "t,ell,tail\n"; }

void append_tail_csv(std::string& out, const DegreeCensus& census) {
    // Walk degree classes from the top down so U(ell) accumulates as a
    // suffix sum, then emit rows for every ell from max_degree to 1.
    char buf[96];
    std::vector<std::string> rows;
    auto it = census.counts.rbegin();
    std::int64_t tail = 0;
    for (std::int64_t ell = census.max_degree; ell >= 1; --ell) {
        while (it != census.counts.rend() && it->first >= ell) {
            tail += it->second;
            ++it;
        }
        std::snprintf(buf, sizeof(buf),
                      "%" PRId64 ",%" PRId64 ",%" PRId64 "\n", census.t, ell,
                      tail);
        rows.emplace_back(buf);
    }
    for (auto r = rows.rbegin(); r != rows.rend(); ++r) out += *r;
}

}  // namespace patree
