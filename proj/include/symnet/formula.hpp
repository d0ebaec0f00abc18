#pragma once

#include "symnet/term.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace symnet {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(CmpOp op);
CmpOp negate(CmpOp op);
/// `a op b` <=> `b flip(op) a`.
CmpOp flip(CmpOp op);
bool compare(CmpOp op, std::uint64_t lhs, std::uint64_t rhs);

/// Boolean combination of unsigned comparisons between linear terms. The
/// unit handed to the solver. Immutable; copies share structure.
class Formula {
public:
    enum class Kind { True, False, Cmp, And, Or, Not };

    Formula();

    static Formula truth(bool value);
    static Formula cmp(CmpOp op, LinearTerm lhs, LinearTerm rhs);
    static Formula conj(std::vector<Formula> items);
    static Formula disj(std::vector<Formula> items);
    static Formula negation(Formula operand);

    /// Like conj/disj/negation but folds constant children away.
    static Formula simplified_and(std::vector<Formula> items);
    static Formula simplified_or(std::vector<Formula> items);
    static Formula simplified_not(Formula operand);

    Kind kind() const noexcept;
    CmpOp op() const;
    const LinearTerm& lhs() const;
    const LinearTerm& rhs() const;
    std::span<const Formula> children() const;

    bool evaluate(const Assignment& model) const;
    /// The truth value when the formula mentions no symbols.
    std::optional<bool> constant_value() const;

    void collect_symbols(std::vector<SymbolId>& out) const;
    std::vector<SymbolId> symbols() const;

    Formula substitute(const std::map<SymbolId, LinearTerm>& replacement) const;

    /// Infix rendering, e.g. `(s4 == 123) & !(s5 < 2)`.
    std::string to_string() const;
    /// Canonical, unambiguous serialization used as a cache key.
    std::string canonical() const;
    void append_canonical(std::string& out) const;

    bool same_node(const Formula& other) const noexcept { return node_ == other.node_; }
    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

} // namespace symnet
