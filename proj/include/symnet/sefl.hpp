#pragma once

#include "symnet/formula.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symnet {

/// SEFL expression. Literals carry no width; they adopt the width of the
/// surrounding context (the other operand or the assignment target).
class Expr {
public:
    enum class Kind { Literal, Symbol, Header, Meta, Tag, Add, Sub, Neg };

    static Expr literal(std::uint64_t value);
    /// A fresh unconstrained symbolic value each time it is evaluated.
    static Expr symbolic();
    /// Reference to the header at `address`; a width, when given, must match
    /// the allocation exactly.
    static Expr header(Expr address, std::optional<unsigned> width = std::nullopt);
    static Expr meta(std::string key);
    static Expr tag(std::string name);
    static Expr add(Expr lhs, Expr rhs);
    static Expr sub(Expr lhs, Expr rhs);
    static Expr neg(Expr operand);

    Kind kind() const noexcept;
    std::uint64_t value() const;
    const std::string& name() const;
    const Expr& operand(std::size_t i) const;
    std::optional<unsigned> width() const;

    friend Expr operator+(Expr a, Expr b) { return add(std::move(a), std::move(b)); }
    friend Expr operator-(Expr a, Expr b) { return sub(std::move(a), std::move(b)); }
    friend Expr operator-(Expr a) { return neg(std::move(a)); }
    friend Expr operator+(Expr a, std::int64_t b);
    friend Expr operator-(Expr a, std::int64_t b);
    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/// Condition over expressions. A comparison may leave its left operand open
/// (`==0x0800` in the two-argument Constrain form); the instruction's target
/// fills it.
class Cond {
public:
    enum class Kind { True, False, Cmp, And, Or, Not };

    static Cond truth(bool v);
    static Cond cmp(CmpOp op, Expr lhs, Expr rhs);
    static Cond open(CmpOp op, Expr rhs);
    static Cond all(std::vector<Cond> items);
    static Cond any(std::vector<Cond> items);
    static Cond negation(Cond operand);

    Kind kind() const noexcept;
    CmpOp op() const;
    const std::optional<Expr>& lhs() const;
    const Expr& rhs() const;
    const std::vector<Cond>& children() const;

    /// Left-most expression mentioned, used to bind the one-argument Constrain.
    std::optional<Expr> leftmost() const;
    Cond fill(const Expr& target) const;
    bool has_open() const;

    friend bool operator==(const Cond& a, const Cond& b);

private:
    struct Node;
    explicit Cond(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

enum class Scope { Global, Local };

/// Header address or metadata key.
struct Target {
    bool is_meta = false;
    std::optional<Expr> address;
    std::string key;
    std::optional<unsigned> width;

    static Target header(Expr address, std::optional<unsigned> width = std::nullopt) {
        return Target{false, std::move(address), {}, width};
    }
    static Target meta(std::string key) { return Target{true, std::nullopt, std::move(key), std::nullopt}; }
    Expr as_expr() const { return is_meta ? Expr::meta(key) : Expr::header(*address, width); }
    friend bool operator==(const Target&, const Target&) = default;
};

class Instr {
public:
    enum class Kind {
        Allocate,
        Deallocate,
        Assign,
        CreateTag,
        DestroyTag,
        Constrain,
        Fail,
        If,
        For,
        Forward,
        Fork,
        Block,
        NoOp
    };

    static Instr allocate(Target target, std::optional<unsigned> size, Scope scope = Scope::Global);
    static Instr deallocate(Target target, std::optional<unsigned> size = std::nullopt);
    static Instr assign(Target target, Expr value);
    static Instr create_tag(std::string name, Expr value);
    static Instr destroy_tag(std::string name);
    /// Two-argument form when `target` is set; otherwise the condition is complete.
    static Instr constrain(std::optional<Target> target, Cond cond);
    static Instr constrain(Cond cond) { return constrain(std::nullopt, std::move(cond)); }
    static Instr fail(std::string message);
    static Instr if_(Cond cond, Instr then_branch, Instr else_branch);
    static Instr for_(std::string binder, std::string pattern, Instr body);
    static Instr forward(unsigned port);
    static Instr fork(std::vector<unsigned> ports);
    static Instr block(std::vector<Instr> items);
    static Instr noop();

    Kind kind() const noexcept;
    const Target& target() const;
    bool has_target() const;
    std::optional<unsigned> size() const;
    Scope scope() const;
    const Expr& expr() const;
    /// Tag name, fail message or loop binder.
    const std::string& name() const;
    const std::string& pattern() const;
    const Cond& cond() const;
    /// If: {then, else}; For: {body}; Block: items.
    const std::vector<Instr>& children() const;
    const std::vector<unsigned>& ports() const;

    /// Number of instruction nodes in this subtree (cached).
    std::size_t subtree_size() const noexcept;

    friend bool operator==(const Instr& a, const Instr& b);

private:
    struct Node;
    static Instr build(Node n);
    explicit Instr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// ---- header field shorthands ----

struct FieldShorthand {
    std::string name;
    std::string tag;
    std::int64_t offset;
    unsigned width;
};

/// Name -> (tag, offset, width). The first entry registered for an address is
/// the one the printer uses.
class ShorthandTable {
public:
    static const ShorthandTable& builtin();

    void add(FieldShorthand f);
    const FieldShorthand* find(std::string_view name) const;
    const FieldShorthand* find_address(std::string_view tag, std::int64_t offset) const;
    const std::vector<FieldShorthand>& entries() const noexcept { return entries_; }

private:
    std::vector<FieldShorthand> entries_;
};

/// HeaderRef(Tag(tag) + offset). Throws PathError(UnknownShorthand).
Expr expand_shorthand(std::string_view name, const ShorthandTable& table = ShorthandTable::builtin());
const FieldShorthand& shorthand(std::string_view name, const ShorthandTable& table = ShorthandTable::builtin());
/// Header target for a shorthand name.
Target field(std::string_view name, const ShorthandTable& table = ShorthandTable::builtin());

/// Tag name and offset when `address` has the form Tag(t) [+|- literal].
std::optional<std::pair<std::string, std::int64_t>> tag_offset(const Expr& address);

// ---- printing ----

std::string print(const Expr& e, const ShorthandTable& table = ShorthandTable::builtin());
std::string print(const Cond& c, const ShorthandTable& table = ShorthandTable::builtin());
std::string print(const Instr& i, const ShorthandTable& table = ShorthandTable::builtin(), int indent = 0);

/// Element model in surface syntax.
struct ElementCode {
    std::vector<std::pair<std::optional<unsigned>, Instr>> inputs; // nullopt = InputPort(*)
    std::vector<std::pair<unsigned, Instr>> outputs;
    friend bool operator==(const ElementCode&, const ElementCode&) = default;
};
std::string print(const ElementCode& code, const ShorthandTable& table = ShorthandTable::builtin());

/// Parses `InputPort(n):` / `OutputPort(n):` sections. Text without any
/// section header becomes the body of `InputPort(*)`. Throws ParseError.
ElementCode parse_sefl(std::string_view text, const ShorthandTable& table = ShorthandTable::builtin());
/// Parses a comma- or newline-separated instruction sequence (one item stays unwrapped).
Instr parse_instructions(std::string_view text, const ShorthandTable& table = ShorthandTable::builtin());
Cond parse_condition(std::string_view text, const ShorthandTable& table = ShorthandTable::builtin());

/// Replaces `${binder}` (and `${binder.N}`, the key's trailing digits) in
/// every metadata key, tag name and string of the subtree.
Instr substitute_binder(const Instr& body, std::string_view binder, std::string_view key);

} // namespace symnet
