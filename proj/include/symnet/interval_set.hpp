#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace symnet {

using u128 = unsigned __int128;

struct Interval {
    std::uint64_t lo;
    std::uint64_t hi; // inclusive
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A modular arc `lo, lo+1, ..., lo+len` (mod 2^width), len < 2^width.
struct Arc {
    std::uint64_t lo;
    std::uint64_t len;
};

/// Finite set of unsigned values within [0, 2^width) stored as sorted,
/// disjoint, non-adjacent closed intervals.
class IntervalSet {
public:
    IntervalSet() = default;

    static IntervalSet full(unsigned width);
    static IntervalSet point(std::uint64_t v);
    static IntervalSet range(std::uint64_t lo, std::uint64_t hi);
    static IntervalSet from_arc(const Arc& arc, unsigned width);
    /// Normalizes an arbitrary list of (possibly overlapping) intervals.
    static IntervalSet from_intervals(std::vector<Interval> intervals);

    bool empty() const noexcept { return items_.empty(); }
    bool is_point() const noexcept { return items_.size() == 1 && items_[0].lo == items_[0].hi; }
    std::uint64_t min() const { return items_.front().lo; }
    std::uint64_t max() const { return items_.back().hi; }
    u128 cardinality() const;
    bool contains(std::uint64_t v) const;
    bool is_full(unsigned width) const;
    const std::vector<Interval>& intervals() const noexcept { return items_; }

    IntervalSet intersect(const IntervalSet& other) const;
    IntervalSet unite(const IntervalSet& other) const;
    IntervalSet complement(unsigned width) const;
    bool intersects(const IntervalSet& other) const;
    bool subset_of(const IntervalSet& other) const;

    /// {(x + c) mod 2^width : x in set}
    IntervalSet rotate(std::uint64_t c, unsigned width) const;
    /// {(-x) mod 2^width : x in set}
    IntervalSet reflect(unsigned width) const;
    /// Smallest modular arc covering the set (complement of its largest gap).
    Arc hull_arc(unsigned width) const;

    std::string to_string() const;

    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

private:
    explicit IntervalSet(std::vector<Interval> items) : items_(std::move(items)) {}
    std::vector<Interval> items_;
};

} // namespace symnet
