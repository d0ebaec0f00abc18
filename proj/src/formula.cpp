#include "symnet/formula.hpp"

#include <algorithm>
#include <stdexcept>

namespace symnet {

std::string_view to_string(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "?";
}

CmpOp negate(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
    }
    return op;
}

CmpOp flip(CmpOp op) {
    switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
    }
}

bool compare(CmpOp op, std::uint64_t lhs, std::uint64_t rhs) {
    switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    }
    return false;
}

struct Formula::Node {
    Kind kind;
    CmpOp op = CmpOp::Eq;
    LinearTerm lhs;
    LinearTerm rhs;
    std::vector<Formula> children;
};

Formula::Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Formula::Formula() : Formula(truth(true)) {}

Formula Formula::truth(bool value) {
    static const auto t = std::make_shared<const Node>(Node{Kind::True, CmpOp::Eq, {}, {}, {}});
    static const auto f = std::make_shared<const Node>(Node{Kind::False, CmpOp::Eq, {}, {}, {}});
    return Formula(value ? t : f);
}

Formula Formula::cmp(CmpOp op, LinearTerm lhs, LinearTerm rhs) {
    if (lhs.width() != rhs.width())
        throw std::invalid_argument("comparison between terms of different width");
    return Formula(std::make_shared<const Node>(Node{Kind::Cmp, op, std::move(lhs), std::move(rhs), {}}));
}

Formula Formula::conj(std::vector<Formula> items) {
    return Formula(std::make_shared<const Node>(Node{Kind::And, CmpOp::Eq, {}, {}, std::move(items)}));
}

Formula Formula::disj(std::vector<Formula> items) {
    return Formula(std::make_shared<const Node>(Node{Kind::Or, CmpOp::Eq, {}, {}, std::move(items)}));
}

Formula Formula::negation(Formula operand) {
    return Formula(std::make_shared<const Node>(Node{Kind::Not, CmpOp::Eq, {}, {}, {std::move(operand)}}));
}

Formula Formula::simplified_and(std::vector<Formula> items) {
    std::vector<Formula> kept;
    kept.reserve(items.size());
    for (auto& f : items) {
        if (auto c = f.constant_value()) {
            if (!*c)
                return truth(false);
            continue;
        }
        kept.push_back(std::move(f));
    }
    if (kept.empty())
        return truth(true);
    if (kept.size() == 1)
        return kept.front();
    return conj(std::move(kept));
}

Formula Formula::simplified_or(std::vector<Formula> items) {
    std::vector<Formula> kept;
    kept.reserve(items.size());
    for (auto& f : items) {
        if (auto c = f.constant_value()) {
            if (*c)
                return truth(true);
            continue;
        }
        kept.push_back(std::move(f));
    }
    if (kept.empty())
        return truth(false);
    if (kept.size() == 1)
        return kept.front();
    return disj(std::move(kept));
}

Formula Formula::simplified_not(Formula operand) {
    if (auto c = operand.constant_value())
        return truth(!*c);
    if (operand.kind() == Kind::Not)
        return operand.children().front();
    if (operand.kind() == Kind::Cmp)
        return cmp(negate(operand.op()), operand.lhs(), operand.rhs());
    return negation(std::move(operand));
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

CmpOp Formula::op() const { return node_->op; }

const LinearTerm& Formula::lhs() const { return node_->lhs; }

const LinearTerm& Formula::rhs() const { return node_->rhs; }

std::span<const Formula> Formula::children() const { return node_->children; }

bool Formula::evaluate(const Assignment& model) const {
    switch (node_->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Cmp: return compare(node_->op, node_->lhs.evaluate(model), node_->rhs.evaluate(model));
    case Kind::And:
        return std::all_of(node_->children.begin(), node_->children.end(),
                           [&](const Formula& f) { return f.evaluate(model); });
    case Kind::Or:
        return std::any_of(node_->children.begin(), node_->children.end(),
                           [&](const Formula& f) { return f.evaluate(model); });
    case Kind::Not: return !node_->children.front().evaluate(model);
    }
    return false;
}

std::optional<bool> Formula::constant_value() const {
    switch (node_->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Cmp:
        if (node_->lhs.is_concrete() && node_->rhs.is_concrete())
            return compare(node_->op, node_->lhs.constant_part(), node_->rhs.constant_part());
        return std::nullopt;
    case Kind::And: {
        bool all_known = true;
        for (const auto& f : node_->children) {
            auto v = f.constant_value();
            if (v && !*v)
                return false;
            if (!v)
                all_known = false;
        }
        return all_known ? std::optional<bool>(true) : std::nullopt;
    }
    case Kind::Or: {
        bool all_known = true;
        for (const auto& f : node_->children) {
            auto v = f.constant_value();
            if (v && *v)
                return true;
            if (!v)
                all_known = false;
        }
        return all_known ? std::optional<bool>(false) : std::nullopt;
    }
    case Kind::Not: {
        auto v = node_->children.front().constant_value();
        if (v)
            return !*v;
        return std::nullopt;
    }
    }
    return std::nullopt;
}

void Formula::collect_symbols(std::vector<SymbolId>& out) const {
    switch (node_->kind) {
    case Kind::True:
    case Kind::False: return;
    case Kind::Cmp:
        node_->lhs.collect_symbols(out);
        node_->rhs.collect_symbols(out);
        return;
    default:
        for (const auto& f : node_->children)
            f.collect_symbols(out);
    }
}

std::vector<SymbolId> Formula::symbols() const {
    std::vector<SymbolId> out;
    collect_symbols(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Formula Formula::substitute(const std::map<SymbolId, LinearTerm>& replacement) const {
    switch (node_->kind) {
    case Kind::True:
    case Kind::False: return *this;
    case Kind::Cmp:
        return cmp(node_->op, node_->lhs.substitute(replacement), node_->rhs.substitute(replacement));
    case Kind::Not: return negation(node_->children.front().substitute(replacement));
    default: {
        std::vector<Formula> kids;
        kids.reserve(node_->children.size());
        for (const auto& f : node_->children)
            kids.push_back(f.substitute(replacement));
        return node_->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
    }
    }
}

std::string Formula::to_string() const {
    switch (node_->kind) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Cmp:
        return node_->lhs.to_string() + " " + std::string(symnet::to_string(node_->op)) + " " +
               node_->rhs.to_string();
    case Kind::Not: {
        const auto& c = node_->children.front();
        if (c.kind() == Kind::Cmp || c.kind() == Kind::Not)
            return "!(" + c.to_string() + ")";
        return "!" + c.to_string();
    }
    default: {
        if (node_->children.empty())
            return node_->kind == Kind::And ? "true" : "false";
        const char* sep = node_->kind == Kind::And ? " & " : " | ";
        std::string out = "(";
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (i)
                out += sep;
            out += node_->children[i].to_string();
        }
        return out + ")";
    }
    }
}

namespace {

void append_term(std::string& out, const LinearTerm& t) {
    out += 'w';
    out += std::to_string(t.width());
    out += ':';
    out += std::to_string(t.constant_part());
    for (const auto& m : t.monomials()) {
        out += '+';
        out += std::to_string(m.coeff);
        out += '*';
        out += std::to_string(m.symbol);
    }
}

} // namespace

void Formula::append_canonical(std::string& out) const {
    switch (node_->kind) {
    case Kind::True: out += 'T'; return;
    case Kind::False: out += 'F'; return;
    case Kind::Cmp:
        out += "C";
        out += std::to_string(static_cast<int>(node_->op));
        out += '(';
        append_term(out, node_->lhs);
        out += ',';
        append_term(out, node_->rhs);
        out += ')';
        return;
    case Kind::Not:
        out += "N(";
        node_->children.front().append_canonical(out);
        out += ')';
        return;
    default:
        out += node_->kind == Kind::And ? "A(" : "O(";
        for (const auto& f : node_->children) {
            f.append_canonical(out);
            out += ';';
        }
        out += ')';
    }
}

std::string Formula::canonical() const {
    std::string out;
    append_canonical(out);
    return out;
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_)
        return true;
    if (a.kind() != b.kind())
        return false;
    switch (a.kind()) {
    case Formula::Kind::True:
    case Formula::Kind::False: return true;
    case Formula::Kind::Cmp: return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
    default: {
        auto ca = a.children();
        auto cb = b.children();
        return ca.size() == cb.size() && std::equal(ca.begin(), ca.end(), cb.begin());
    }
    }
}

} // namespace symnet
