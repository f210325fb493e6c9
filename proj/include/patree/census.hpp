#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "patree/errors.hpp"

// Degree census of a growing tree: D_t(ell) counts the vertices of degree
// exactly ell at time t, U_t(ell) = sum_{k >= ell} D_t(k) is the upper tail.
// In a tree on t vertices the census always satisfies
//   sum_ell D_t(ell) = t        and   sum_ell ell * D_t(ell) = 2(t-1),
// and U_t(1) = t.

namespace patree {

// Immutable sparse census snapshot.  counts holds only nonzero entries.
struct DegreeCensus {
    std::int64_t t = 0;
    std::map<std::int64_t, std::int64_t> counts;
    std::int64_t max_degree = 0;

    std::int64_t count(std::int64_t ell) const {
        auto it = counts.find(ell);
        return it == counts.end() ? 0 : it->second;
    }

    std::int64_t vertex_total() const;  // sum of counts
    std::int64_t degree_total() const;  // sum of ell * count

    // Throws ConsistencyError unless the two sums match a tree on t vertices.
    void check_tree_invariants() const;
};

// U_t(ell): number of vertices of degree at least ell.
std::int64_t tail_census(const DegreeCensus& census, std::int64_t ell);

// One attachment applied in place: the new vertex arrives with degree 1 and
// the attachment target moves from degree k to k+1.  k must be a degree class
// with a positive count; otherwise the update is inconsistent with the
// census and a ConsistencyError is thrown.  O(log #classes).
void apply_event(DegreeCensus& census, std::int64_t target_degree);

// Mutable census tracker for the simulation hot loop: dense array for
// degrees up to kDenseDegrees, spill map above, O(1) per attachment.
class LiveCensus {
  public:
    static constexpr std::int64_t kDenseDegrees = 1024;

    LiveCensus() : dense_(kDenseDegrees + 2, 0) {}

    void reset(const DegreeCensus& census);

    // Attachment whose target had degree old_deg before the step.
    void record_attachment(std::uint32_t old_deg) {
        bump(old_deg, -1);
        bump(old_deg + 1, +1);
        ++dense_[1];
        ++t_;
        if (old_deg + 1 > max_degree_) max_degree_ = old_deg + 1;
    }

    std::int64_t t() const { return t_; }
    std::int64_t max_degree() const { return max_degree_; }

    std::int64_t count(std::int64_t ell) const {
        if (ell <= kDenseDegrees) return dense_[static_cast<size_t>(ell)];
        auto it = spill_.find(ell);
        return it == spill_.end() ? 0 : it->second;
    }

    DegreeCensus snapshot() const;

  private:
    void bump(std::int64_t ell, std::int64_t delta) {
        if (ell <= kDenseDegrees) {
            dense_[static_cast<size_t>(ell)] += delta;
        } else {
            auto [it, inserted] = spill_.try_emplace(ell, 0);
            it->second += delta;
            if (it->second == 0) spill_.erase(it);
        }
    }

    std::vector<std::int64_t> dense_;
    std::map<std::int64_t, std::int64_t> spill_;
    std::int64_t t_ = 0;
    std::int64_t max_degree_ = 0;
};

// Histogram of attachments keyed by the target's degree before the step.
// The census after any number of steps is a linear function of this
// histogram: every attachment at class ell moves one vertex from ell to
// ell + 1 and adds one leaf, and those shifts commute.  The hot loop pays
// a single counter increment per step and full censuses are materialized
// on demand with apply_to.
class AttachmentTally {
  public:
    static constexpr std::int64_t kDenseDegrees = LiveCensus::kDenseDegrees;

    AttachmentTally()
        : dense_(static_cast<std::size_t>(kDenseDegrees) + 1, 0) {}

    void record_attachment(std::uint32_t old_deg) {
        if (old_deg <= kDenseDegrees) {
            ++dense_[old_deg];
        } else {
            ++spill_[old_deg];
        }
    }

    // Per-step recorder for observer lambdas.  It carries the dense table's
    // base pointer by value so a capturing loop keeps it in a register;
    // going through the tally member would reload it around every growth
    // check in the sampling loop.  The recorder must not outlive its tally.
    class Recorder {
      public:
        explicit Recorder(AttachmentTally& tally)
            : dense_(tally.dense_.data()), tally_(&tally) {}

        void operator()(std::uint32_t old_deg) const {
            if (old_deg <= kDenseDegrees) {
                ++dense_[old_deg];
            } else {
                ++tally_->spill_[old_deg];
            }
        }

      private:
        std::int64_t* dense_;
        AttachmentTally* tally_;
    };

    // Number of attachments recorded so far.
    std::int64_t steps() const;

    // Census reached by replaying every tallied attachment on top of base.
    // Throws ConsistencyError if the tally cannot have come from a run that
    // started at base (some degree class would go negative).
    DegreeCensus apply_to(const DegreeCensus& base) const;

  private:
    std::vector<std::int64_t> dense_;
    std::map<std::int64_t, std::int64_t> spill_;
};

// CSV emission.  Counts are integers and are printed exactly.
// Header: t,ell,count -- one row per nonzero degree class.
std::string census_csv_header();
void append_census_csv(std::string& out, const DegreeCensus& census);
// Header: t,ell,tail -- rows for ell = 1..max_degree.
std::string tail_csv_header();
void append_tail_csv(std::string& out, const DegreeCensus& census);

}  // namespace patree
