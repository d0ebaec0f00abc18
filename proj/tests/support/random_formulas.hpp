#pragma once

// Random formulas over a few same-width variables, plus an exhaustive
// enumeration oracle that evaluates a flattened copy of the formula.

#include "symnet/formula.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace symnet::oracle {

inline LinearTerm random_term(std::mt19937_64& rng, const std::vector<SymbolId>& vars, unsigned w) {
    const std::uint64_t mask = width_mask(w);
    LinearTerm t = LinearTerm::constant(w, rng() & mask);
    const int shape = static_cast<int>(rng() % 6);
    const auto var = [&] { return LinearTerm::symbol(w, vars[rng() % vars.size()]); };
    switch (shape) {
    case 0: return t;
    case 1:
    case 2: return t + var();
    case 3: return t - var();
    case 4: return t + var() - var();
    default: return t + var() + var();
    }
}

inline Formula random_literal(std::mt19937_64& rng, const std::vector<SymbolId>& vars, unsigned w) {
    const auto op = static_cast<CmpOp>(rng() % 6);
    LinearTerm lhs = random_term(rng, vars, w);
    if (lhs.is_concrete())
        lhs = lhs + LinearTerm::symbol(w, vars[rng() % vars.size()]);
    LinearTerm rhs = (rng() % 3 == 0) ? random_term(rng, vars, w) : LinearTerm::constant(w, rng() & width_mask(w));
    return Formula::cmp(op, std::move(lhs), std::move(rhs));
}

inline Formula random_tree(std::mt19937_64& rng, const std::vector<SymbolId>& vars, unsigned w, int leaves) {
    if (leaves <= 1) {
        Formula lit = random_literal(rng, vars, w);
        return rng() % 5 == 0 ? Formula::negation(lit) : lit;
    }
    const int left = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(leaves - 1));
    std::vector<Formula> kids{random_tree(rng, vars, w, left), random_tree(rng, vars, w, leaves - left)};
    Formula node = rng() % 2 ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
    return rng() % 6 == 0 ? Formula::negation(node) : node;
}

/// A conjunction of 1..3 random trees using at most `max_literals` leaves.
inline std::vector<Formula> random_conjunction(std::mt19937_64& rng, const std::vector<SymbolId>& vars, unsigned w,
                                               int max_literals) {
    std::vector<Formula> out;
    int budget = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_literals));
    const int parts = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < parts && budget > 0; ++i) {
        const int take = i + 1 == parts ? budget : 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(budget));
        out.push_back(random_tree(rng, vars, w, take));
        budget -= take;
    }
    return out;
}

/// Flattened evaluator: terms become coefficient vectors over variable slots.
class BruteForce {
public:
    BruteForce(const std::vector<Formula>& conj, const std::vector<SymbolId>& vars, unsigned w)
        : vars_(vars)
        , mask_(width_mask(w)) {
        for (const auto& f : conj)
            roots_.push_back(flatten(f));
    }

    bool holds(const std::vector<std::uint64_t>& values) const {
        for (int r : roots_)
            if (!eval(r, values))
                return false;
        return true;
    }

    /// First satisfying assignment in lexicographic order (vars[0] most significant).
    std::optional<std::vector<std::uint64_t>> first_model() const {
        std::vector<std::uint64_t> values(vars_.size(), 0);
        for (;;) {
            if (holds(values))
                return values;
            std::size_t i = values.size();
            for (;;) {
                if (i == 0)
                    return std::nullopt;
                --i;
                if (values[i] < mask_) {
                    ++values[i];
                    for (std::size_t j = i + 1; j < values.size(); ++j)
                        values[j] = 0;
                    break;
                }
            }
        }
    }

private:
    struct Term {
        std::uint64_t c = 0;
        std::vector<std::uint64_t> coeff;
    };
    struct Item {
        Formula::Kind kind;
        CmpOp op = CmpOp::Eq;
        Term lhs, rhs;
        std::vector<int> kids;
    };

    Term term(const LinearTerm& t) const {
        Term out;
        out.c = t.constant_part();
        out.coeff.assign(vars_.size(), 0);
        for (const auto& m : t.monomials())
            for (std::size_t i = 0; i < vars_.size(); ++i)
                if (vars_[i] == m.symbol)
                    out.coeff[i] += m.coeff;
        return out;
    }

    int flatten(const Formula& f) {
        Item it{f.kind(), CmpOp::Eq, {}, {}, {}};
        if (f.kind() == Formula::Kind::Cmp) {
            it.op = f.op();
            it.lhs = term(f.lhs());
            it.rhs = term(f.rhs());
        }
        for (const auto& c : f.children())
            it.kids.push_back(flatten(c));
        items_.push_back(std::move(it));
        return static_cast<int>(items_.size()) - 1;
    }

    std::uint64_t value(const Term& t, const std::vector<std::uint64_t>& v) const {
        std::uint64_t acc = t.c;
        for (std::size_t i = 0; i < v.size(); ++i)
            acc += t.coeff[i] * v[i];
        return acc & mask_;
    }

    bool eval(int idx, const std::vector<std::uint64_t>& v) const {
        const Item& it = items_[static_cast<std::size_t>(idx)];
        switch (it.kind) {
        case Formula::Kind::True: return true;
        case Formula::Kind::False: return false;
        case Formula::Kind::Cmp: {
            const std::uint64_t a = value(it.lhs, v), b = value(it.rhs, v);
            switch (it.op) {
            case CmpOp::Eq: return a == b;
            case CmpOp::Ne: return a != b;
            case CmpOp::Lt: return a < b;
            case CmpOp::Le: return a <= b;
            case CmpOp::Gt: return a > b;
            case CmpOp::Ge: return a >= b;
            }
            return false;
        }
        case Formula::Kind::Not: return !eval(it.kids[0], v);
        case Formula::Kind::And:
            for (int k : it.kids)
                if (!eval(k, v))
                    return false;
            return true;
        case Formula::Kind::Or:
            for (int k : it.kids)
                if (eval(k, v))
                    return true;
            return false;
        }
        return false;
    }

    std::vector<SymbolId> vars_;
    std::uint64_t mask_;
    std::vector<Item> items_;
    std::vector<int> roots_;
};

} // namespace symnet::oracle
