#include "symnet/interval_set.hpp"

#include "symnet/term.hpp"

#include <algorithm>
#include <sstream>

namespace symnet {

IntervalSet IntervalSet::full(unsigned width) { return IntervalSet({{0, width_mask(width)}}); }

IntervalSet IntervalSet::point(std::uint64_t v) { return IntervalSet({{v, v}}); }

IntervalSet IntervalSet::range(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi)
        return {};
    return IntervalSet({{lo, hi}});
}

IntervalSet IntervalSet::from_arc(const Arc& arc, unsigned width) {
    const std::uint64_t mask = width_mask(width);
    if (arc.len >= mask)
        return full(width);
    const std::uint64_t end = (arc.lo + arc.len) & mask;
    if (end >= arc.lo)
        return IntervalSet({{arc.lo, end}});
    return IntervalSet({{0, end}, {arc.lo, mask}});
}

IntervalSet IntervalSet::from_intervals(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    out.reserve(v.size());
    for (const auto& iv : v) {
        if (iv.lo > iv.hi)
            continue;
        if (!out.empty() && (out.back().hi == ~std::uint64_t{0} || iv.lo <= out.back().hi + 1)) {
            out.back().hi = std::max(out.back().hi, iv.hi);
        } else {
            out.push_back(iv);
        }
    }
    return IntervalSet(std::move(out));
}

u128 IntervalSet::cardinality() const {
    u128 n = 0;
    for (const auto& iv : items_)
        n += static_cast<u128>(iv.hi - iv.lo) + 1;
    return n;
}

bool IntervalSet::contains(std::uint64_t v) const {
    auto it = std::upper_bound(items_.begin(), items_.end(), v,
                               [](std::uint64_t x, const Interval& iv) { return x < iv.lo; });
    if (it == items_.begin())
        return false;
    --it;
    return v <= it->hi;
}

bool IntervalSet::is_full(unsigned width) const {
    return items_.size() == 1 && items_[0].lo == 0 && items_[0].hi == width_mask(width);
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < items_.size() && j < other.items_.size()) {
        const auto& a = items_[i];
        const auto& b = other.items_[j];
        const std::uint64_t lo = std::max(a.lo, b.lo);
        const std::uint64_t hi = std::min(a.hi, b.hi);
        if (lo <= hi)
            out.push_back({lo, hi});
        if (a.hi < b.hi)
            ++i;
        else
            ++j;
    }
    return IntervalSet(std::move(out));
}

bool IntervalSet::intersects(const IntervalSet& other) const {
    std::size_t i = 0, j = 0;
    while (i < items_.size() && j < other.items_.size()) {
        const auto& a = items_[i];
        const auto& b = other.items_[j];
        if (std::max(a.lo, b.lo) <= std::min(a.hi, b.hi))
            return true;
        if (a.hi < b.hi)
            ++i;
        else
            ++j;
    }
    return false;
}

bool IntervalSet::subset_of(const IntervalSet& other) const { return intersect(other).cardinality() == cardinality(); }

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
    std::vector<Interval> all = items_;
    all.insert(all.end(), other.items_.begin(), other.items_.end());
    return from_intervals(std::move(all));
}

IntervalSet IntervalSet::complement(unsigned width) const {
    const std::uint64_t mask = width_mask(width);
    std::vector<Interval> out;
    std::uint64_t next = 0;
    bool done = false;
    for (const auto& iv : items_) {
        if (iv.lo > next)
            out.push_back({next, iv.lo - 1});
        if (iv.hi >= mask) {
            done = true;
            break;
        }
        next = iv.hi + 1;
    }
    if (!done)
        out.push_back({next, mask});
    return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::rotate(std::uint64_t c, unsigned width) const {
    const std::uint64_t mask = width_mask(width);
    c &= mask;
    if (c == 0)
        return *this;
    std::vector<Interval> out;
    out.reserve(items_.size() + 1);
    for (const auto& iv : items_) {
        const std::uint64_t lo = (iv.lo + c) & mask;
        const std::uint64_t hi = (iv.hi + c) & mask;
        if (lo <= hi) {
            out.push_back({lo, hi});
        } else {
            out.push_back({lo, mask});
            out.push_back({0, hi});
        }
    }
    return from_intervals(std::move(out));
}

IntervalSet IntervalSet::reflect(unsigned width) const {
    const std::uint64_t mask = width_mask(width);
    std::vector<Interval> out;
    out.reserve(items_.size() + 1);
    for (const auto& iv : items_) {
        std::uint64_t lo = iv.lo;
        if (lo == 0) {
            out.push_back({0, 0});
            if (iv.hi == 0)
                continue;
            lo = 1;
        }
        // -x for x in [lo, hi] with lo >= 1 is [2^w - hi, 2^w - lo].
        out.push_back({(mask - iv.hi) + 1, (mask - lo) + 1});
    }
    return from_intervals(std::move(out));
}

Arc IntervalSet::hull_arc(unsigned width) const {
    const std::uint64_t mask = width_mask(width);
    if (items_.empty())
        return {0, 0};
    // Largest gap between consecutive intervals, plus the wrap-around gap.
    u128 best_gap = 0;
    std::size_t best_after = items_.size(); // gap starts after items_[best_after]
    for (std::size_t i = 0; i + 1 < items_.size(); ++i) {
        const u128 gap = static_cast<u128>(items_[i + 1].lo) - items_[i].hi - 1;
        if (gap > best_gap) {
            best_gap = gap;
            best_after = i;
        }
    }
    const u128 wrap_gap = (static_cast<u128>(mask) - items_.back().hi) + items_.front().lo;
    if (wrap_gap >= best_gap) {
        const u128 len = static_cast<u128>(items_.back().hi) - items_.front().lo;
        return {items_.front().lo, static_cast<std::uint64_t>(len)};
    }
    const std::uint64_t lo = items_[best_after + 1].lo;
    const std::uint64_t end = items_[best_after].hi;
    const std::uint64_t len = (end - lo) & mask;
    return {lo, len};
}

std::string IntervalSet::to_string() const {
    std::ostringstream out;
    out << "{";
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (i)
            out << ", ";
        if (items_[i].lo == items_[i].hi)
            out << items_[i].lo;
        else
            out << "[" << items_[i].lo << "," << items_[i].hi << "]";
    }
    out << "}";
    return out.str();
}

} // namespace symnet
