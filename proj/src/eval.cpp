#include "symnet/error.hpp"
#include "symnet/path_state.hpp"

namespace symnet {

namespace {

const Frame& deref(const Expr& e, const PathState& path) {
    if (e.kind() == Expr::Kind::Header)
        return path.header(eval_address(e.operand(0), path), e.width());
    return path.meta(e.name());
}

std::optional<unsigned> join(std::optional<unsigned> a, std::optional<unsigned> b) {
    if (a && b && *a != *b)
        throw PathError(ErrorKind::WidthMismatch, std::to_string(*a) + " vs " + std::to_string(*b) + " bits");
    return a ? a : b;
}

LinearTerm term_of(const Expr& e, const PathState& path, IdSource& ids, unsigned w) {
    switch (e.kind()) {
    case Expr::Kind::Literal:
        if (w < 64 && e.value() > width_mask(w))
            throw PathError(ErrorKind::LiteralOverflow,
                            std::to_string(e.value()) + " does not fit " + std::to_string(w) + " bits");
        return LinearTerm::constant(w, e.value());
    case Expr::Kind::Symbol: return LinearTerm::symbol(w, ids.next());
    case Expr::Kind::Header:
    case Expr::Kind::Meta: {
        const Frame& f = deref(e, path);
        if (f.size != w)
            throw PathError(ErrorKind::WidthMismatch,
                            std::to_string(f.size) + "-bit reference in a " + std::to_string(w) + "-bit expression");
        return f.value.term;
    }
    case Expr::Kind::Tag:
        return LinearTerm::constant(w, static_cast<std::uint64_t>(path.tag(e.name())) & width_mask(w));
    case Expr::Kind::Add: return term_of(e.operand(0), path, ids, w) + term_of(e.operand(1), path, ids, w);
    case Expr::Kind::Sub: return term_of(e.operand(0), path, ids, w) - term_of(e.operand(1), path, ids, w);
    case Expr::Kind::Neg: return -term_of(e.operand(0), path, ids, w);
    }
    return LinearTerm::constant(w, 0);
}

} // namespace

std::int64_t eval_address(const Expr& e, const PathState& path) {
    switch (e.kind()) {
    case Expr::Kind::Literal: return static_cast<std::int64_t>(e.value());
    case Expr::Kind::Symbol: throw PathError(ErrorKind::SymbolicAddress, "SymbolicValue() in an address");
    case Expr::Kind::Tag: return path.tag(e.name());
    case Expr::Kind::Header:
    case Expr::Kind::Meta: {
        const Frame& f = deref(e, path);
        if (!f.value.is_concrete())
            throw PathError(ErrorKind::SymbolicAddress, "address reads symbolic " + f.value.term.to_string());
        return static_cast<std::int64_t>(f.value.term.constant_part());
    }
    case Expr::Kind::Add: return eval_address(e.operand(0), path) + eval_address(e.operand(1), path);
    case Expr::Kind::Sub: return eval_address(e.operand(0), path) - eval_address(e.operand(1), path);
    case Expr::Kind::Neg: return -eval_address(e.operand(0), path);
    }
    return 0;
}

std::optional<unsigned> intrinsic_width(const Expr& e, const PathState& path) {
    switch (e.kind()) {
    case Expr::Kind::Literal:
    case Expr::Kind::Symbol:
    case Expr::Kind::Tag: return std::nullopt;
    case Expr::Kind::Header:
    case Expr::Kind::Meta: return deref(e, path).size;
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return join(intrinsic_width(e.operand(0), path), intrinsic_width(e.operand(1), path));
    case Expr::Kind::Neg: return intrinsic_width(e.operand(0), path);
    }
    return std::nullopt;
}

Value fresh_value(IdSource& ids, unsigned width) {
    const auto id = ids.next();
    return Value{id, LinearTerm::symbol(width, id)};
}

Value eval_expr(const Expr& e, const PathState& path, IdSource& ids, std::optional<unsigned> width) {
    const auto own = intrinsic_width(e, path);
    const unsigned w = join(width, own).value_or(kDefaultMetaWidth);
    if (e.kind() == Expr::Kind::Header || e.kind() == Expr::Kind::Meta)
        return deref(e, path).value;
    if (e.kind() == Expr::Kind::Symbol)
        return fresh_value(ids, w);
    LinearTerm t = term_of(e, path, ids, w);
    return Value{ids.next(), std::move(t)};
}

Formula eval_cond(const Cond& c, const PathState& path, IdSource& ids) {
    switch (c.kind()) {
    case Cond::Kind::True: return Formula::truth(true);
    case Cond::Kind::False: return Formula::truth(false);
    case Cond::Kind::Cmp: {
        if (!c.lhs())
            throw PathError(ErrorKind::UnsupportedFragment, "comparison without a left operand");
        const unsigned w =
            join(intrinsic_width(*c.lhs(), path), intrinsic_width(c.rhs(), path)).value_or(kDefaultMetaWidth);
        return Formula::cmp(c.op(), term_of(*c.lhs(), path, ids, w), term_of(c.rhs(), path, ids, w));
    }
    case Cond::Kind::Not: return Formula::negation(eval_cond(c.children()[0], path, ids));
    case Cond::Kind::And:
    case Cond::Kind::Or: {
        std::vector<Formula> kids;
        kids.reserve(c.children().size());
        for (const auto& k : c.children())
            kids.push_back(eval_cond(k, path, ids));
        return c.kind() == Cond::Kind::And ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
    }
    }
    return Formula::truth(true);
}

} // namespace symnet
