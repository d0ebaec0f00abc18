#include "symnet/solver.hpp"

#include "symnet/error.hpp"
#include "symnet/interval_set.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <numeric>

namespace symnet {

WidthMap symbol_widths(std::span<const Formula> formulas) {
    WidthMap out;
    struct Walker {
        WidthMap& out;
        void term(const LinearTerm& t) {
            for (const auto& m : t.monomials())
                out.emplace(m.symbol, t.width());
        }
        void visit(const Formula& f) {
            switch (f.kind()) {
            case Formula::Kind::True:
            case Formula::Kind::False: return;
            case Formula::Kind::Cmp:
                term(f.lhs());
                term(f.rhs());
                return;
            default:
                for (const auto& c : f.children())
                    visit(c);
            }
        }
    } walker{out};
    for (const auto& f : formulas)
        walker.visit(f);
    return out;
}

SolveResult Solver::check(std::span<const Formula> conjunction) {
    const auto start = std::chrono::steady_clock::now();
    ++stats_.calls;
    SolveResult result;
    bool all_concrete = true;
    bool value = true;
    for (const auto& f : conjunction) {
        auto c = f.constant_value();
        if (!c) {
            all_concrete = false;
            break;
        }
        value = value && *c;
    }
    if (all_concrete) {
        result.sat = value;
    } else {
        const WidthMap widths = symbol_widths(conjunction);
        result = solve(conjunction, widths);
        if (result.sat) {
            for (auto& [sym, v] : result.model) {
                auto it = widths.find(sym);
                if (it != widths.end())
                    v &= width_mask(it->second);
            }
            for (const auto& f : conjunction) {
                if (!f.evaluate(result.model))
                    throw SolverError("model fails re-check on " + f.to_string());
            }
        }
    }
    stats_.millis += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

using i128 = __int128;

struct Mono {
    std::size_t var;
    std::uint64_t coeff;
};

struct Lin {
    std::uint64_t c = 0;
    std::vector<Mono> m;
};

struct Node {
    enum class K { True, False, Lit, Set, And, Or };
    K k = K::True;
    CmpOp op = CmpOp::Eq;
    unsigned w = 0;
    Lin lhs; // Eq/Ne: lhs - rhs, compared against 0
    Lin rhs;
    std::size_t var = 0;
    IntervalSet set;
    std::vector<Node> kids;
    std::vector<std::size_t> vars;
};

enum class Tri { False, True, Unknown };

using Doms = std::vector<IntervalSet>;

void merge_vars(std::vector<std::size_t>& into, const std::vector<std::size_t>& from) {
    if (from.empty())
        return;
    if (into.empty()) {
        into = from;
        return;
    }
    std::vector<std::size_t> out;
    out.reserve(into.size() + from.size());
    std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
    into.swap(out);
}

IntervalSet cmp_set(CmpOp op, std::uint64_t k, unsigned w) {
    const std::uint64_t mask = width_mask(w);
    switch (op) {
    case CmpOp::Eq: return IntervalSet::point(k);
    case CmpOp::Ne: return IntervalSet::point(k).complement(w);
    case CmpOp::Lt: return k == 0 ? IntervalSet{} : IntervalSet::range(0, k - 1);
    case CmpOp::Le: return IntervalSet::range(0, k);
    case CmpOp::Gt: return k == mask ? IntervalSet{} : IntervalSet::range(k + 1, mask);
    case CmpOp::Ge: return IntervalSet::range(k, mask);
    }
    return {};
}

/// {x : a*x + c in s} for a = +-1
IntervalSet preimage(const IntervalSet& s, std::uint64_t a, std::uint64_t c, unsigned w) {
    const std::uint64_t mask = width_mask(w);
    IntervalSet shifted = s.rotate((0 - c) & mask, w);
    return a == 1 ? shifted : shifted.reflect(w);
}

class Compiler {
public:
    Compiler(const std::map<SymbolId, std::size_t>& index, const std::vector<unsigned>& widths)
        : index_(index)
        , widths_(widths) {}

    Node build(const Formula& f, bool neg) {
        switch (f.kind()) {
        case Formula::Kind::True: return constant(!neg);
        case Formula::Kind::False: return constant(neg);
        case Formula::Kind::Cmp: return literal(neg ? negate(f.op()) : f.op(), f.lhs(), f.rhs());
        case Formula::Kind::Not: return build(f.children().front(), !neg);
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            const bool is_and = (f.kind() == Formula::Kind::And) != neg;
            Node n;
            n.k = is_and ? Node::K::And : Node::K::Or;
            for (const auto& c : f.children()) {
                Node kid = build(c, neg);
                if (kid.k == Node::K::True) {
                    if (is_and)
                        continue;
                    return constant(true);
                }
                if (kid.k == Node::K::False) {
                    if (!is_and)
                        continue;
                    return constant(false);
                }
                merge_vars(n.vars, kid.vars);
                if (kid.k == n.k) {
                    for (auto& g : kid.kids)
                        n.kids.push_back(std::move(g));
                } else {
                    n.kids.push_back(std::move(kid));
                }
            }
            if (n.kids.empty())
                return constant(is_and);
            if (n.kids.size() == 1)
                return std::move(n.kids.front());
            return n;
        }
        }
        return constant(true);
    }

    /// Replaces every subtree over a single variable by its exact value set.
    void compile(Node& n) {
        if (n.vars.size() == 1 && (n.k == Node::K::Lit || n.k == Node::K::And || n.k == Node::K::Or)) {
            if (auto s = unary_set(n, n.vars.front())) {
                const std::size_t v = n.vars.front();
                n.k = Node::K::Set;
                n.var = v;
                n.set = std::move(*s);
                n.kids.clear();
                return;
            }
        }
        for (auto& kid : n.kids)
            compile(kid);
    }

private:
    static Node constant(bool v) {
        Node n;
        n.k = v ? Node::K::True : Node::K::False;
        return n;
    }

    Lin to_lin(const LinearTerm& t, std::vector<std::size_t>& vars) const {
        Lin out;
        out.c = t.constant_part();
        for (const auto& m : t.monomials()) {
            const std::size_t v = index_.at(m.symbol);
            out.m.push_back({v, m.coeff});
            vars.push_back(v);
        }
        return out;
    }

    Node literal(CmpOp op, const LinearTerm& lhs, const LinearTerm& rhs) {
        Node n;
        n.k = Node::K::Lit;
        n.op = op;
        n.w = lhs.width();
        if (op == CmpOp::Eq || op == CmpOp::Ne) {
            const LinearTerm d = lhs - rhs;
            if (d.is_concrete())
                return constant((d.constant_part() == 0) == (op == CmpOp::Eq));
            n.lhs = to_lin(d, n.vars);
        } else {
            if (lhs.is_concrete() && rhs.is_concrete())
                return constant(compare(op, lhs.constant_part(), rhs.constant_part()));
            n.lhs = to_lin(lhs, n.vars);
            n.rhs = to_lin(rhs, n.vars);
        }
        std::sort(n.vars.begin(), n.vars.end());
        n.vars.erase(std::unique(n.vars.begin(), n.vars.end()), n.vars.end());
        return n;
    }

    static bool unit(const Lin& t, std::uint64_t mask) {
        return t.m.size() == 1 && (t.m[0].coeff == 1 || t.m[0].coeff == mask);
    }

    std::optional<IntervalSet> leaf_set(const Node& n) const {
        const unsigned w = n.w;
        const std::uint64_t mask = width_mask(w);
        if (n.op == CmpOp::Eq || n.op == CmpOp::Ne) {
            if (!unit(n.lhs, mask))
                return std::nullopt;
            IntervalSet s = preimage(IntervalSet::point(0), n.lhs.m[0].coeff, n.lhs.c, w);
            return n.op == CmpOp::Eq ? s : s.complement(w);
        }
        const bool lc = n.lhs.m.empty();
        const bool rc = n.rhs.m.empty();
        if (rc && unit(n.lhs, mask))
            return preimage(cmp_set(n.op, n.rhs.c, w), n.lhs.m[0].coeff, n.lhs.c, w);
        if (lc && unit(n.rhs, mask))
            return preimage(cmp_set(flip(n.op), n.lhs.c, w), n.rhs.m[0].coeff, n.rhs.c, w);
        if (unit(n.lhs, mask) && unit(n.rhs, mask) && n.lhs.m[0].coeff == n.rhs.m[0].coeff) {
            // y op (y + d) where y = lhs
            const std::uint64_t d = (n.rhs.c - n.lhs.c) & mask;
            IntervalSet ys;
            if (d == 0) {
                const bool holds = n.op == CmpOp::Le || n.op == CmpOp::Ge;
                ys = holds ? IntervalSet::full(w) : IntervalSet{};
            } else {
                const std::uint64_t last_plain = mask - d; // y + d does not wrap
                const bool below = n.op == CmpOp::Lt || n.op == CmpOp::Le;
                ys = below ? IntervalSet::range(0, last_plain) : IntervalSet::range(last_plain + 1, mask);
            }
            return preimage(ys, n.lhs.m[0].coeff, n.lhs.c, w);
        }
        return std::nullopt;
    }

    std::optional<IntervalSet> unary_set(const Node& n, std::size_t v) const {
        const unsigned w = widths_[v];
        switch (n.k) {
        case Node::K::True: return IntervalSet::full(w);
        case Node::K::False: return IntervalSet{};
        case Node::K::Set: return n.set;
        case Node::K::Lit: return leaf_set(n);
        case Node::K::And: {
            IntervalSet acc = IntervalSet::full(w);
            for (const auto& kid : n.kids) {
                auto s = unary_set(kid, v);
                if (!s)
                    return std::nullopt;
                acc = acc.intersect(*s);
            }
            return acc;
        }
        case Node::K::Or: {
            std::vector<Interval> all;
            for (const auto& kid : n.kids) {
                auto s = unary_set(kid, v);
                if (!s)
                    return std::nullopt;
                all.insert(all.end(), s->intervals().begin(), s->intervals().end());
            }
            return IntervalSet::from_intervals(std::move(all));
        }
        }
        return std::nullopt;
    }

    const std::map<SymbolId, std::size_t>& index_;
    const std::vector<unsigned>& widths_;
};

class Search {
public:
    Search(std::vector<Node> constraints, std::vector<unsigned> widths, std::uint64_t budget)
        : constraints_(std::move(constraints))
        , widths_(std::move(widths))
        , budget_(budget) {}

    std::optional<std::vector<std::uint64_t>> run(Doms doms) {
        if (!dfs(doms))
            return std::nullopt;
        return model_;
    }

    std::uint64_t nodes() const noexcept { return nodes_; }

private:
    // ---- images ----

    IntervalSet image(const Lin& t, unsigned w, const Doms& d) const {
        const std::uint64_t mask = width_mask(w);
        std::uint64_t c = t.c;
        const Mono* single = nullptr;
        std::size_t open = 0;
        for (const auto& m : t.m) {
            if (d[m.var].is_point()) {
                c += m.coeff * d[m.var].min();
            } else {
                ++open;
                single = &m;
            }
        }
        c &= mask;
        if (open == 0)
            return IntervalSet::point(c);
        if (open == 1 && (single->coeff == 1 || single->coeff == mask)) {
            const IntervalSet& s = d[single->var];
            return (single->coeff == 1 ? s : s.reflect(w)).rotate(c, w);
        }
        u128 lo = c;
        u128 len = 0;
        for (const auto& m : t.m) {
            if (d[m.var].is_point())
                continue;
            if (m.coeff != 1 && m.coeff != mask)
                return IntervalSet::full(w);
            const Arc a = (m.coeff == 1 ? d[m.var] : d[m.var].reflect(w)).hull_arc(w);
            lo += a.lo;
            len += a.len;
            if (len >= mask)
                return IntervalSet::full(w);
        }
        return IntervalSet::from_arc({static_cast<std::uint64_t>(lo) & mask, static_cast<std::uint64_t>(len)}, w);
    }

    /// s minus every value of `r` (over-approximated by r's hull arc).
    static IntervalSet difference_set(const IntervalSet& s, const IntervalSet& r, unsigned w) {
        const std::uint64_t mask = width_mask(w);
        if (r.is_point())
            return s.rotate((0 - r.min()) & mask, w);
        if (s.is_point())
            return r.reflect(w).rotate(s.min(), w);
        const Arc a = r.hull_arc(w);
        std::vector<Interval> all;
        for (const auto& iv : s.intervals()) {
            const u128 len = static_cast<u128>(iv.hi - iv.lo) + a.len;
            if (len >= mask)
                return IntervalSet::full(w);
            const std::uint64_t lo = (iv.lo - a.lo - a.len) & mask;
            const IntervalSet part = IntervalSet::from_arc({lo, static_cast<std::uint64_t>(len)}, w);
            all.insert(all.end(), part.intervals().begin(), part.intervals().end());
        }
        return IntervalSet::from_intervals(std::move(all));
    }

    bool narrow(Doms& d, std::size_t v, const IntervalSet& s, bool& changed) const {
        if (s.is_full(widths_[v]))
            return true;
        IntervalSet next = d[v].intersect(s);
        if (next.empty())
            return false;
        if (!(next == d[v])) {
            d[v] = std::move(next);
            changed = true;
        }
        return true;
    }

    /// Narrows the variables of `t` so that t can still take a value in s.
    bool restrict_term(const Lin& t, unsigned w, const IntervalSet& s, Doms& d, bool& changed) const {
        const std::uint64_t mask = width_mask(w);
        if (s.empty())
            return false;
        if (s.is_full(w))
            return true;
        for (std::size_t i = 0; i < t.m.size(); ++i) {
            const Mono& m = t.m[i];
            if (d[m.var].is_point() || (m.coeff != 1 && m.coeff != mask))
                continue;
            Lin rest;
            rest.c = t.c;
            for (std::size_t j = 0; j < t.m.size(); ++j)
                if (j != i)
                    rest.m.push_back(t.m[j]);
            const IntervalSet allowed = difference_set(s, image(rest, w, d), w);
            if (!narrow(d, m.var, m.coeff == 1 ? allowed : allowed.reflect(w), changed))
                return false;
        }
        return image(t, w, d).intersects(s);
    }

    // ---- literal semantics ----

    Tri lit_status(const Node& n, const Doms& d) const {
        if (n.op == CmpOp::Eq || n.op == CmpOp::Ne) {
            const IntervalSet it = image(n.lhs, n.w, d);
            const bool may_zero = it.contains(0);
            const bool only_zero = it.is_point() && it.min() == 0;
            if (n.op == CmpOp::Eq)
                return only_zero ? Tri::True : (may_zero ? Tri::Unknown : Tri::False);
            return only_zero ? Tri::False : (may_zero ? Tri::Unknown : Tri::True);
        }
        const IntervalSet l = image(n.lhs, n.w, d);
        const IntervalSet r = image(n.rhs, n.w, d);
        switch (n.op) {
        case CmpOp::Lt:
            if (l.max() < r.min())
                return Tri::True;
            if (l.min() >= r.max())
                return Tri::False;
            return Tri::Unknown;
        case CmpOp::Le:
            if (l.max() <= r.min())
                return Tri::True;
            if (l.min() > r.max())
                return Tri::False;
            return Tri::Unknown;
        case CmpOp::Gt:
            if (l.min() > r.max())
                return Tri::True;
            if (l.max() <= r.min())
                return Tri::False;
            return Tri::Unknown;
        case CmpOp::Ge:
            if (l.min() >= r.max())
                return Tri::True;
            if (l.max() < r.min())
                return Tri::False;
            return Tri::Unknown;
        default: return Tri::Unknown;
        }
    }

    bool lit_prune(const Node& n, Doms& d, bool& changed) const {
        const unsigned w = n.w;
        const std::uint64_t mask = width_mask(w);
        if (n.op == CmpOp::Eq)
            return restrict_term(n.lhs, w, IntervalSet::point(0), d, changed);
        if (n.op == CmpOp::Ne)
            return restrict_term(n.lhs, w, IntervalSet::range(1, mask), d, changed);
        const IntervalSet l = image(n.lhs, w, d);
        const IntervalSet r = image(n.rhs, w, d);
        const auto below = [&](std::uint64_t bound, bool strict) {
            if (strict)
                return bound == 0 ? IntervalSet{} : IntervalSet::range(0, bound - 1);
            return IntervalSet::range(0, bound);
        };
        const auto above = [&](std::uint64_t bound, bool strict) {
            if (strict)
                return bound == mask ? IntervalSet{} : IntervalSet::range(bound + 1, mask);
            return IntervalSet::range(bound, mask);
        };
        IntervalSet sl, sr;
        switch (n.op) {
        case CmpOp::Lt: sl = below(r.max(), true); sr = above(l.min(), true); break;
        case CmpOp::Le: sl = below(r.max(), false); sr = above(l.min(), false); break;
        case CmpOp::Gt: sl = above(r.min(), true); sr = below(l.max(), true); break;
        case CmpOp::Ge: sl = above(r.min(), false); sr = below(l.max(), false); break;
        default: return true;
        }
        return restrict_term(n.lhs, w, sl, d, changed) && restrict_term(n.rhs, w, sr, d, changed);
    }

    // ---- tree semantics ----

    Tri status(const Node& n, const Doms& d) const {
        switch (n.k) {
        case Node::K::True: return Tri::True;
        case Node::K::False: return Tri::False;
        case Node::K::Set:
            if (d[n.var].subset_of(n.set))
                return Tri::True;
            return d[n.var].intersects(n.set) ? Tri::Unknown : Tri::False;
        case Node::K::Lit: return lit_status(n, d);
        case Node::K::And: {
            Tri acc = Tri::True;
            for (const auto& kid : n.kids) {
                const Tri t = status(kid, d);
                if (t == Tri::False)
                    return Tri::False;
                if (t == Tri::Unknown)
                    acc = Tri::Unknown;
            }
            return acc;
        }
        case Node::K::Or: {
            Tri acc = Tri::False;
            for (const auto& kid : n.kids) {
                const Tri t = status(kid, d);
                if (t == Tri::True)
                    return Tri::True;
                if (t == Tri::Unknown)
                    acc = Tri::Unknown;
            }
            return acc;
        }
        }
        return Tri::Unknown;
    }

    bool prune(const Node& n, Doms& d, bool& changed) const {
        switch (n.k) {
        case Node::K::True: return true;
        case Node::K::False: return false;
        case Node::K::Set: return narrow(d, n.var, n.set, changed);
        case Node::K::Lit: return lit_prune(n, d, changed);
        case Node::K::And:
            for (const auto& kid : n.kids)
                if (!prune(kid, d, changed))
                    return false;
            return true;
        case Node::K::Or: {
            std::vector<const Node*> alive;
            for (const auto& kid : n.kids) {
                const Tri t = status(kid, d);
                if (t == Tri::True)
                    return true;
                if (t == Tri::Unknown)
                    alive.push_back(&kid);
            }
            if (alive.empty())
                return false;
            if (alive.size() == 1)
                return prune(*alive.front(), d, changed);
            if (alive.size() > kMaxConstructive)
                return true;
            // Constructive disjunction: each variable keeps the union of what
            // the surviving alternatives allow.
            std::vector<std::vector<Interval>> unions(n.vars.size());
            std::size_t survivors = 0;
            for (const Node* kid : alive) {
                Doms trial = d;
                bool dummy = false;
                if (!prune(*kid, trial, dummy))
                    continue;
                ++survivors;
                for (std::size_t i = 0; i < n.vars.size(); ++i) {
                    const auto& iv = trial[n.vars[i]].intervals();
                    unions[i].insert(unions[i].end(), iv.begin(), iv.end());
                }
            }
            if (survivors == 0)
                return false;
            for (std::size_t i = 0; i < n.vars.size(); ++i)
                if (!narrow(d, n.vars[i], IntervalSet::from_intervals(std::move(unions[i])), changed))
                    return false;
            return true;
        }
        }
        return true;
    }

    // ---- difference bounds ----

    void collect_forced(const Node& n, const Doms& d, std::vector<const Node*>& out) const {
        switch (n.k) {
        case Node::K::Lit: out.push_back(&n); return;
        case Node::K::And:
            for (const auto& kid : n.kids)
                collect_forced(kid, d, out);
            return;
        case Node::K::Or: {
            const Node* only = nullptr;
            for (const auto& kid : n.kids) {
                if (status(kid, d) == Tri::False)
                    continue;
                if (only)
                    return;
                only = &kid;
            }
            if (only)
                collect_forced(*only, d, out);
            return;
        }
        default: return;
        }
    }

    /// Integer offset k with x + c == x + k for every x in the domain, if the
    /// addition wraps uniformly.
    std::optional<i128> plain_offset(const IntervalSet& dom, std::uint64_t c, unsigned w) const {
        if (c == 0)
            return i128{0};
        const u128 modulus = static_cast<u128>(width_mask(w)) + 1;
        if (static_cast<u128>(dom.max()) + c < modulus)
            return static_cast<i128>(c);
        if (static_cast<u128>(dom.min()) + c >= modulus)
            return static_cast<i128>(c) - static_cast<i128>(modulus);
        return std::nullopt;
    }

    struct Edge {
        std::size_t from;
        std::size_t to;
        i128 weight;
    };

    bool dbm(Doms& d, bool& changed) const {
        std::vector<const Node*> lits;
        for (const auto& c : constraints_)
            if (status(c, d) != Tri::True)
                collect_forced(c, d, lits);
        std::vector<Edge> edges;
        std::vector<std::size_t> nodes;
        const auto add = [&](std::size_t x, std::size_t y, i128 w) { // x - y <= w
            edges.push_back({y, x, w});
            nodes.push_back(x);
            nodes.push_back(y);
        };
        for (const Node* n : lits) {
            const unsigned w = n->w;
            const std::uint64_t mask = width_mask(w);
            std::size_t x, y;
            std::uint64_t c1, c2;
            CmpOp op = n->op;
            if (op == CmpOp::Eq) {
                if (n->lhs.m.size() != 2)
                    continue;
                const Mono& a = n->lhs.m[0];
                const Mono& b = n->lhs.m[1];
                if (a.coeff == 1 && b.coeff == mask) {
                    x = a.var;
                    y = b.var;
                } else if (a.coeff == mask && b.coeff == 1) {
                    x = b.var;
                    y = a.var;
                } else {
                    continue;
                }
                c1 = n->lhs.c;
                c2 = 0;
            } else if (op != CmpOp::Ne) {
                if (n->lhs.m.size() != 1 || n->rhs.m.size() != 1 || n->lhs.m[0].coeff != 1 || n->rhs.m[0].coeff != 1)
                    continue;
                x = n->lhs.m[0].var;
                y = n->rhs.m[0].var;
                if (x == y)
                    continue;
                c1 = n->lhs.c;
                c2 = n->rhs.c;
            } else {
                continue;
            }
            const auto k1 = plain_offset(d[x], c1, w);
            const auto k2 = plain_offset(d[y], c2, w);
            if (!k1 || !k2)
                continue;
            const i128 delta = *k2 - *k1; // x + k1 op y + k2  <=>  x - y op delta
            switch (op) {
            case CmpOp::Eq: add(x, y, delta); add(y, x, -delta); break;
            case CmpOp::Lt: add(x, y, delta - 1); break;
            case CmpOp::Le: add(x, y, delta); break;
            case CmpOp::Gt: add(y, x, -delta - 1); break;
            case CmpOp::Ge: add(y, x, -delta); break;
            default: break;
            }
        }
        if (edges.empty())
            return true;
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        const std::size_t zero = nodes.size();
        std::map<std::size_t, std::size_t> pos;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            pos[nodes[i]] = i;
        std::vector<Edge> g;
        for (const auto& e : edges)
            g.push_back({pos[e.from], pos[e.to], e.weight});
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            g.push_back({zero, i, static_cast<i128>(d[nodes[i]].max())});
            g.push_back({i, zero, -static_cast<i128>(d[nodes[i]].min())});
        }
        const std::size_t count = nodes.size() + 1;
        const auto shortest = [&](bool reversed, std::vector<i128>& dist) {
            constexpr i128 inf = static_cast<i128>(1) << 100;
            dist.assign(count, inf);
            dist[zero] = 0;
            for (std::size_t round = 0; round < count; ++round) {
                bool relaxed = false;
                for (const auto& e : g) {
                    const std::size_t from = reversed ? e.to : e.from;
                    const std::size_t to = reversed ? e.from : e.to;
                    if (dist[from] == inf)
                        continue;
                    if (dist[from] + e.weight < dist[to]) {
                        dist[to] = dist[from] + e.weight;
                        relaxed = true;
                    }
                }
                if (!relaxed)
                    return true;
            }
            return false; // negative cycle
        };
        std::vector<i128> up, down;
        if (!shortest(false, up) || !shortest(true, down))
            return false;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const i128 hi = up[i];
            const i128 lo = -down[i];
            if (lo > hi || hi < 0)
                return false;
            const std::uint64_t mask = width_mask(widths_[nodes[i]]);
            const std::uint64_t l = lo < 0 ? 0 : static_cast<std::uint64_t>(lo);
            const std::uint64_t h = hi > static_cast<i128>(mask) ? mask : static_cast<std::uint64_t>(hi);
            if (!narrow(d, nodes[i], IntervalSet::range(l, h), changed))
                return false;
        }
        return true;
    }

    bool propagate(Doms& d) const {
        for (int round = 0; round < kMaxRounds; ++round) {
            bool changed = false;
            for (const auto& c : constraints_) {
                const Tri t = status(c, d);
                if (t == Tri::True)
                    continue;
                if (t == Tri::False)
                    return false;
                if (!prune(c, d, changed))
                    return false;
            }
            if (!dbm(d, changed))
                return false;
            if (!changed)
                break;
        }
        return true;
    }

    // ---- search ----

    void collect_lits(const Node& n, std::size_t v, std::vector<const Node*>& out) const {
        if (n.k == Node::K::Lit) {
            if (std::binary_search(n.vars.begin(), n.vars.end(), v))
                out.push_back(&n);
            return;
        }
        for (const auto& kid : n.kids)
            if (std::binary_search(kid.vars.begin(), kid.vars.end(), v))
                collect_lits(kid, v, out);
    }

    /// Point where some unresolved `+-x + c` stops or starts wrapping.
    std::optional<std::uint64_t> wrap_split(std::size_t v, const IntervalSet& dom,
                                            const std::vector<const Node*>& open) const {
        const unsigned w = widths_[v];
        const std::uint64_t mask = width_mask(w);
        std::vector<const Node*> lits;
        for (const Node* c : open)
            collect_lits(*c, v, lits);
        for (const Node* n : lits) {
            for (const Lin* side : {&n->lhs, &n->rhs}) {
                if (side->c == 0)
                    continue;
                for (const auto& m : side->m) {
                    if (m.var != v)
                        continue;
                    std::uint64_t p;
                    if (m.coeff == 1)
                        p = (0 - side->c) & mask;
                    else if (m.coeff == mask)
                        p = side->c == mask ? 0 : side->c + 1;
                    else
                        continue;
                    if (p > dom.min() && p <= dom.max())
                        return p;
                }
            }
        }
        return std::nullopt;
    }

    bool dfs(Doms& d) {
        if (++nodes_ > budget_)
            throw SolverError("solver search budget exhausted");
        if (!propagate(d))
            return false;
        std::vector<const Node*> open;
        for (const auto& c : constraints_)
            if (status(c, d) != Tri::True)
                open.push_back(&c);
        if (open.empty()) {
            model_.resize(d.size());
            for (std::size_t i = 0; i < d.size(); ++i)
                model_[i] = d[i].min();
            return true;
        }
        std::optional<std::size_t> pick;
        for (std::size_t v = 0; v < d.size() && !pick; ++v) {
            if (d[v].is_point())
                continue;
            for (const Node* c : open) {
                if (std::binary_search(c->vars.begin(), c->vars.end(), v)) {
                    pick = v;
                    break;
                }
            }
        }
        if (!pick)
            return false; // all open variables fixed yet undecided: cannot happen for exact images
        const std::size_t v = *pick;
        const IntervalSet& dom = d[v];
        IntervalSet lower, upper;
        if (auto p = wrap_split(v, dom, open)) {
            lower = dom.intersect(IntervalSet::range(dom.min(), *p - 1));
            upper = dom.intersect(IntervalSet::range(*p, dom.max()));
        } else if (dom.intervals().size() > 1) {
            const auto& iv = dom.intervals();
            const std::size_t half = iv.size() / 2;
            lower = dom.intersect(IntervalSet::range(iv.front().lo, iv[half - 1].hi));
            upper = dom.intersect(IntervalSet::range(iv[half].lo, iv.back().hi));
        } else {
            const std::uint64_t lo = dom.min();
            const std::uint64_t mid = lo + (dom.max() - lo) / 2;
            lower = IntervalSet::range(lo, mid);
            upper = IntervalSet::range(mid + 1, dom.max());
        }
        {
            Doms child = d;
            child[v] = std::move(lower);
            if (dfs(child))
                return true;
        }
        Doms child = std::move(d);
        child[v] = std::move(upper);
        return dfs(child);
    }

    static constexpr int kMaxRounds = 64;
    static constexpr std::size_t kMaxConstructive = 16;

    std::vector<Node> constraints_;
    std::vector<unsigned> widths_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    std::vector<std::uint64_t> model_;
};

} // namespace

namespace {

/// Inverse of an odd value modulo 2^64 (Newton iteration).
std::uint64_t odd_inverse(std::uint64_t a) {
    std::uint64_t x = a;
    for (int i = 0; i < 6; ++i)
        x *= 2 - a * x;
    return x;
}

/// `x = t` for a top-level `lhs == rhs` in which x has an odd coefficient.
std::optional<std::pair<SymbolId, LinearTerm>> solved_form(const Formula& f) {
    if (f.kind() != Formula::Kind::Cmp || f.op() != CmpOp::Eq)
        return std::nullopt;
    const LinearTerm d = f.lhs() - f.rhs();
    std::optional<LinearTerm::Monomial> best;
    for (const auto& m : d.monomials()) {
        if (m.coeff % 2 == 0)
            continue;
        if (m.coeff == 1 || m.coeff == width_mask(d.width())) {
            best = m;
            break;
        }
        if (!best)
            best = m;
    }
    if (!best)
        return std::nullopt;
    const LinearTerm rest = d - LinearTerm::symbol(d.width(), best->symbol).scaled(best->coeff);
    return std::make_pair(best->symbol, rest.scaled(0 - odd_inverse(best->coeff)));
}

/// Truth value of an equality or disequality decided by 2-adic valuation:
/// `k*t + c == 0` has no solution when 2^v divides every coefficient but not c.
std::optional<bool> parity_verdict(const Formula& f) {
    if (f.kind() != Formula::Kind::Cmp || (f.op() != CmpOp::Eq && f.op() != CmpOp::Ne))
        return std::nullopt;
    const LinearTerm d = f.lhs() - f.rhs();
    if (d.is_concrete())
        return std::nullopt;
    unsigned v = 64;
    for (const auto& m : d.monomials())
        v = std::min(v, static_cast<unsigned>(std::countr_zero(m.coeff)));
    if (v == 0 || v >= d.width())
        return std::nullopt;
    if (d.constant_part() & width_mask(v))
        return f.op() == CmpOp::Ne;
    return std::nullopt;
}

} // namespace

SolveResult InternalSolver::solve(std::span<const Formula> conjunction, const WidthMap& widths) {
    std::vector<Formula> work;
    const auto flatten = [&](const Formula& f, auto&& self) -> void {
        if (f.kind() == Formula::Kind::And)
            for (const auto& c : f.children())
                self(c, self);
        else
            work.push_back(f);
    };
    for (const auto& f : conjunction)
        flatten(f, flatten);
    // One pass: each solvable equality extends the substitution, kept over
    // the remaining symbols only.
    std::map<SymbolId, LinearTerm> subst;
    std::vector<std::pair<SymbolId, LinearTerm>> solved;
    std::vector<Formula> rest;
    rest.reserve(work.size());
    for (auto& f : work) {
        if (!subst.empty())
            f = f.substitute(subst);
        const auto s = solved_form(f);
        if (!s || widths.at(s->first) != s->second.width()) {
            rest.push_back(std::move(f));
            continue;
        }
        const std::map<SymbolId, LinearTerm> one{{s->first, s->second}};
        for (auto& [sym, t] : subst)
            t = t.substitute(one);
        subst.emplace(s->first, s->second);
        solved.push_back(*s);
    }
    work.clear();
    for (auto& f : rest)
        work.push_back(f.substitute(subst));
    for (auto& [sym, t] : solved)
        t = subst.at(sym);
    std::vector<Formula> kept;
    for (const auto& f : work) {
        const auto v = f.constant_value() ? f.constant_value() : parity_verdict(f);
        if (v == false)
            return {};
        if (!v)
            kept.push_back(f);
    }
    work = std::move(kept);
    SolveResult out = solve_split(work, symbol_widths(work));
    if (!out.sat)
        return out;
    for (const auto& [sym, t] : solved)
        for (const auto& m : t.monomials())
            out.model.emplace(m.symbol, 0);
    for (const auto& [sym, t] : solved)
        out.model[sym] = t.evaluate(out.model);
    return out;
}

SolveResult InternalSolver::solve_split(std::span<const Formula> conjunction, const WidthMap& widths) {
    // Split into independent components by shared symbols.
    std::map<SymbolId, std::size_t> sym_pos;
    for (const auto& [s, w] : widths)
        sym_pos.emplace(s, sym_pos.size());
    std::vector<std::size_t> parent(sym_pos.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::vector<std::vector<SymbolId>> syms(conjunction.size());
    for (std::size_t i = 0; i < conjunction.size(); ++i) {
        const auto& f = conjunction[i];
        if (auto c = f.constant_value()) {
            if (!*c)
                return {};
            continue;
        }
        syms[i] = f.symbols();
        for (std::size_t k = 1; k < syms[i].size(); ++k)
            parent[find(sym_pos[syms[i][k]])] = find(sym_pos[syms[i][0]]);
    }
    std::map<std::size_t, std::vector<Formula>> groups;
    for (std::size_t i = 0; i < conjunction.size(); ++i)
        if (!syms[i].empty())
            groups[find(sym_pos[syms[i][0]])].push_back(conjunction[i]);

    SolveResult out;
    out.sat = true;
    for (auto& [root, formulas] : groups) {
        std::string key;
        if (options_.cache) {
            for (const auto& f : formulas) {
                f.append_canonical(key);
                key += '\n';
            }
            std::lock_guard lock(cache_mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                ++stats_.cache_hits;
                if (!it->second)
                    return {};
                out.model.insert(it->second->begin(), it->second->end());
                continue;
            }
        }
        SolveResult part = solve_component(formulas, widths);
        if (options_.cache) {
            std::lock_guard lock(cache_mutex_);
            if (cache_.size() >= options_.cache_limit)
                cache_.clear();
            cache_.emplace(std::move(key), part.sat ? std::optional<Assignment>(part.model) : std::nullopt);
        }
        if (!part.sat)
            return {};
        out.model.insert(part.model.begin(), part.model.end());
    }
    return out;
}

SolveResult InternalSolver::solve_component(std::span<const Formula> conjunction, const WidthMap& all_widths) {
    std::map<SymbolId, std::size_t> index;
    std::vector<SymbolId> ids;
    for (const auto& f : conjunction)
        for (SymbolId s : f.symbols())
            index.emplace(s, 0);
    std::vector<unsigned> widths;
    for (auto& [s, pos] : index) {
        pos = ids.size();
        ids.push_back(s);
        widths.push_back(all_widths.at(s));
    }
    Compiler compiler(index, widths);
    Doms doms;
    for (unsigned w : widths)
        doms.push_back(IntervalSet::full(w));
    std::vector<Node> constraints;
    for (const auto& f : conjunction) {
        Node n = compiler.build(f, false);
        compiler.compile(n);
        std::vector<Node> parts;
        if (n.k == Node::K::And)
            parts = std::move(n.kids);
        else
            parts.push_back(std::move(n));
        for (auto& p : parts) {
            if (p.k == Node::K::True)
                continue;
            if (p.k == Node::K::False)
                return {};
            if (p.k == Node::K::Set) {
                doms[p.var] = doms[p.var].intersect(p.set);
                if (doms[p.var].empty())
                    return {};
                continue;
            }
            constraints.push_back(std::move(p));
        }
    }
    const Doms initial = doms;
    Search search(std::move(constraints), widths, options_.node_budget);
    std::optional<std::vector<std::uint64_t>> model;
    try {
        model = search.run(std::move(doms));
    } catch (const SolverError&) {
        stats_.search_nodes += search.nodes();
        u128 space = 1;
        for (const auto& d : initial) {
            space *= d.cardinality();
            if (space > options_.enumeration_limit)
                throw;
        }
        return enumerate(conjunction, ids, initial);
    }
    stats_.search_nodes += search.nodes();
    if (!model)
        return {};
    SolveResult out;
    out.sat = true;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out.model[ids[i]] = (*model)[i];
    return out;
}

SolveResult InternalSolver::enumerate(std::span<const Formula> conjunction, const std::vector<SymbolId>& ids,
                                      const std::vector<IntervalSet>& doms) {
    Assignment a;
    const std::function<bool(std::size_t)> walk = [&](std::size_t i) {
        if (i == ids.size()) {
            ++stats_.search_nodes;
            return std::all_of(conjunction.begin(), conjunction.end(), [&](const Formula& f) { return f.evaluate(a); });
        }
        for (const auto& iv : doms[i].intervals()) {
            for (std::uint64_t v = iv.lo;; ++v) {
                a[ids[i]] = v;
                if (walk(i + 1))
                    return true;
                if (v == iv.hi)
                    break;
            }
        }
        return false;
    };
    if (!walk(0))
        return {};
    return {true, a};
}

std::unique_ptr<Solver> make_solver(std::string_view backend) {
    if (backend.empty() || backend == "internal")
        return std::make_unique<InternalSolver>();
    constexpr std::string_view prefix = "bridge:";
    if (backend.substr(0, prefix.size()) == prefix && backend.size() > prefix.size())
        return std::make_unique<BridgeSolver>(std::string(backend.substr(prefix.size())));
    throw SolverError("unknown solver backend '" + std::string(backend) + "'");
}

std::unique_ptr<Solver> make_solver_from_env() {
    const char* env = std::getenv("SYMNET_SOLVER");
    return make_solver(env ? std::string_view(env) : std::string_view{});
}

// ---- loop subsumption ----

LoopVerdict check_loop(Solver& solver, const LoopSide& o, const LoopSide& n) {
    if (o.fields.size() != n.fields.size())
        throw std::invalid_argument("loop check over different field selectors");
    SymbolId top = 0;
    const auto bump = [&](const LinearTerm& t) {
        for (const auto& m : t.monomials())
            top = std::max(top, m.symbol);
    };
    for (const auto* side : {&o, &n}) {
        for (const auto& f : side->fields)
            if (f)
                bump(*f);
        for (const auto& c : side->constraints)
            for (SymbolId s : c.symbols())
                top = std::max(top, s);
    }
    std::vector<LinearTerm> field_vars(o.fields.size());
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < o.fields.size(); ++i) {
        const auto& a = o.fields[i];
        const auto& b = n.fields[i];
        if (a.has_value() != b.has_value())
            return {false, std::vector<std::uint64_t>(o.fields.size(), 0)};
        if (!a)
            continue;
        if (a->width() != b->width())
            return {false, std::vector<std::uint64_t>(o.fields.size(), 0)};
        field_vars[i] = LinearTerm::symbol(a->width(), top + 1 + i);
        active.push_back(i);
    }

    std::vector<Formula> query;
    for (std::size_t i : active)
        query.push_back(Formula::cmp(CmpOp::Eq, field_vars[i], *o.fields[i]));

    // Express the new region over the field variables.
    std::map<SymbolId, LinearTerm> mapping;
    std::vector<Formula> region;
    std::vector<std::size_t> deferred;
    for (std::size_t i : active) {
        const LinearTerm& t = *n.fields[i];
        const std::uint64_t mask = width_mask(t.width());
        if (t.is_concrete()) {
            region.push_back(Formula::cmp(CmpOp::Eq, field_vars[i], t));
            continue;
        }
        const auto mono = t.monomials();
        if (mono.size() == 1 && (mono[0].coeff == 1 || mono[0].coeff == mask)) {
            auto it = mapping.find(mono[0].symbol);
            if (it == mapping.end()) {
                const LinearTerm shifted = field_vars[i].plus_constant((0 - t.constant_part()) & mask);
                mapping.emplace(mono[0].symbol, mono[0].coeff == 1 ? shifted : -shifted);
            } else {
                region.push_back(Formula::cmp(CmpOp::Eq, field_vars[i], t.substitute(mapping)));
            }
            continue;
        }
        deferred.push_back(i);
    }
    const auto mapped = [&](const std::vector<SymbolId>& syms) {
        return std::all_of(syms.begin(), syms.end(), [&](SymbolId s) { return mapping.count(s) != 0; });
    };
    for (std::size_t i : deferred) {
        std::vector<SymbolId> syms;
        n.fields[i]->collect_symbols(syms);
        if (mapped(syms))
            region.push_back(Formula::cmp(CmpOp::Eq, field_vars[i], n.fields[i]->substitute(mapping)));
    }
    for (const auto& c : n.constraints) {
        const auto syms = c.symbols();
        if (mapped(syms))
            region.push_back(c.substitute(mapping));
    }
    query.push_back(Formula::simplified_not(Formula::simplified_and(std::move(region))));

    // Old constraints reachable from the old field terms through shared symbols.
    std::vector<SymbolId> relevant;
    for (std::size_t i : active)
        o.fields[i]->collect_symbols(relevant);
    std::sort(relevant.begin(), relevant.end());
    relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());
    std::vector<std::vector<SymbolId>> csyms;
    csyms.reserve(o.constraints.size());
    for (const auto& c : o.constraints)
        csyms.push_back(c.symbols());
    std::vector<bool> taken(o.constraints.size(), false);
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t k = 0; k < o.constraints.size(); ++k) {
            if (taken[k])
                continue;
            const bool touches = std::any_of(csyms[k].begin(), csyms[k].end(), [&](SymbolId s) {
                return std::binary_search(relevant.begin(), relevant.end(), s);
            });
            if (!touches)
                continue;
            taken[k] = true;
            grew = true;
            relevant.insert(relevant.end(), csyms[k].begin(), csyms[k].end());
            std::sort(relevant.begin(), relevant.end());
            relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());
        }
    }
    for (std::size_t k = 0; k < o.constraints.size(); ++k)
        if (taken[k])
            query.push_back(o.constraints[k]);

    const SolveResult r = solver.check(query);
    LoopVerdict verdict;
    verdict.loop = !r.sat;
    if (r.sat) {
        verdict.witness.assign(o.fields.size(), 0);
        for (std::size_t i : active)
            verdict.witness[i] = field_vars[i].evaluate(r.model);
    }
    return verdict;
}

// ---- synthesis ----

Assignment synthesize_model(Solver& solver, std::span<const Formula> conjunction, const SynthesisProfile& profile) {
    std::vector<Formula> q(conjunction.begin(), conjunction.end());
    SolveResult r = solver.check(q);
    if (!r.sat)
        throw SolverError("cannot synthesize a witness for an unsatisfiable path");
    // Preferred constraints are kept greedily, one at a time.
    for (const auto& p : profile.preferred) {
        q.push_back(p);
        SolveResult next = solver.check(q);
        if (next.sat)
            r = std::move(next);
        else
            q.pop_back();
    }
    return std::move(r.model);
}

std::vector<std::uint64_t> synthesize(Solver& solver, std::span<const Formula> conjunction,
                                      std::span<const LinearTerm> wanted, const SynthesisProfile& profile) {
    const Assignment model = synthesize_model(solver, conjunction, profile);
    std::vector<std::uint64_t> out;
    out.reserve(wanted.size());
    for (const auto& t : wanted)
        out.push_back(t.evaluate(model));
    return out;
}

} // namespace symnet
