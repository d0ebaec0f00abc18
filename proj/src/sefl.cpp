#include "symnet/sefl.hpp"

#include "symnet/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace symnet {

// ---- Expr ----

struct Expr::Node {
    Kind kind;
    std::uint64_t value = 0;
    std::string name;
    std::vector<Expr> operands;
    std::optional<unsigned> width;
};

namespace {

template <class N>
std::shared_ptr<const N> make(N n) {
    return std::make_shared<const N>(std::move(n));
}

} // namespace

Expr Expr::literal(std::uint64_t value) { return Expr(make(Node{Kind::Literal, value, {}, {}, {}})); }
Expr Expr::symbolic() { return Expr(make(Node{Kind::Symbol, 0, {}, {}, {}})); }
Expr Expr::header(Expr address, std::optional<unsigned> width) {
    return Expr(make(Node{Kind::Header, 0, {}, {std::move(address)}, width}));
}
Expr Expr::meta(std::string key) { return Expr(make(Node{Kind::Meta, 0, std::move(key), {}, {}})); }
Expr Expr::tag(std::string name) { return Expr(make(Node{Kind::Tag, 0, std::move(name), {}, {}})); }
Expr Expr::add(Expr lhs, Expr rhs) {
    return Expr(make(Node{Kind::Add, 0, {}, {std::move(lhs), std::move(rhs)}, {}}));
}
Expr Expr::sub(Expr lhs, Expr rhs) {
    return Expr(make(Node{Kind::Sub, 0, {}, {std::move(lhs), std::move(rhs)}, {}}));
}
Expr Expr::neg(Expr operand) { return Expr(make(Node{Kind::Neg, 0, {}, {std::move(operand)}, {}})); }

Expr::Kind Expr::kind() const noexcept { return node_->kind; }
std::uint64_t Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
const Expr& Expr::operand(std::size_t i) const { return node_->operands.at(i); }
std::optional<unsigned> Expr::width() const { return node_->width; }

Expr operator+(Expr a, std::int64_t b) {
    if (b < 0)
        return Expr::sub(std::move(a), Expr::literal(static_cast<std::uint64_t>(-b)));
    return Expr::add(std::move(a), Expr::literal(static_cast<std::uint64_t>(b)));
}

Expr operator-(Expr a, std::int64_t b) { return std::move(a) + (-b); }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_)
        return true;
    return a.node_->kind == b.node_->kind && a.node_->value == b.node_->value && a.node_->name == b.node_->name &&
           a.node_->width == b.node_->width && a.node_->operands == b.node_->operands;
}

// ---- Cond ----

struct Cond::Node {
    Kind kind;
    CmpOp op = CmpOp::Eq;
    std::optional<Expr> lhs;
    std::optional<Expr> rhs;
    std::vector<Cond> children;
};

Cond Cond::truth(bool v) { return Cond(make(Node{v ? Kind::True : Kind::False, CmpOp::Eq, {}, {}, {}})); }
Cond Cond::cmp(CmpOp op, Expr lhs, Expr rhs) {
    return Cond(make(Node{Kind::Cmp, op, std::move(lhs), std::move(rhs), {}}));
}
Cond Cond::open(CmpOp op, Expr rhs) { return Cond(make(Node{Kind::Cmp, op, std::nullopt, std::move(rhs), {}})); }
Cond Cond::all(std::vector<Cond> items) { return Cond(make(Node{Kind::And, CmpOp::Eq, {}, {}, std::move(items)})); }
Cond Cond::any(std::vector<Cond> items) { return Cond(make(Node{Kind::Or, CmpOp::Eq, {}, {}, std::move(items)})); }
Cond Cond::negation(Cond operand) { return Cond(make(Node{Kind::Not, CmpOp::Eq, {}, {}, {std::move(operand)}})); }

Cond::Kind Cond::kind() const noexcept { return node_->kind; }
CmpOp Cond::op() const { return node_->op; }
const std::optional<Expr>& Cond::lhs() const { return node_->lhs; }
const Expr& Cond::rhs() const { return *node_->rhs; }
const std::vector<Cond>& Cond::children() const { return node_->children; }

std::optional<Expr> Cond::leftmost() const {
    if (node_->kind == Kind::Cmp)
        return node_->lhs ? node_->lhs : node_->rhs;
    for (const auto& c : node_->children)
        if (auto e = c.leftmost())
            return e;
    return std::nullopt;
}

bool Cond::has_open() const {
    if (node_->kind == Kind::Cmp)
        return !node_->lhs.has_value();
    return std::any_of(node_->children.begin(), node_->children.end(), [](const Cond& c) { return c.has_open(); });
}

Cond Cond::fill(const Expr& target) const {
    switch (node_->kind) {
    case Kind::True:
    case Kind::False: return *this;
    case Kind::Cmp: return node_->lhs ? *this : cmp(node_->op, target, *node_->rhs);
    case Kind::Not: return negation(node_->children[0].fill(target));
    case Kind::And:
    case Kind::Or: {
        std::vector<Cond> kids;
        kids.reserve(node_->children.size());
        for (const auto& c : node_->children)
            kids.push_back(c.fill(target));
        return node_->kind == Kind::And ? all(std::move(kids)) : any(std::move(kids));
    }
    }
    return *this;
}

bool operator==(const Cond& a, const Cond& b) {
    if (a.node_ == b.node_)
        return true;
    return a.node_->kind == b.node_->kind && a.node_->op == b.node_->op && a.node_->lhs == b.node_->lhs &&
           a.node_->rhs == b.node_->rhs && a.node_->children == b.node_->children;
}

// ---- Instr ----

struct Instr::Node {
    Kind kind = Kind::NoOp;
    std::optional<Target> target;
    std::optional<unsigned> size;
    Scope scope = Scope::Global;
    std::optional<Expr> expr;
    std::string name;
    std::string pattern;
    std::optional<Cond> cond;
    std::vector<Instr> children;
    std::vector<unsigned> ports;
    std::size_t subtree = 1;
};

Instr Instr::build(Node n) {
    n.subtree = 1;
    for (const auto& c : n.children)
        n.subtree += c.subtree_size();
    return Instr(std::make_shared<const Node>(std::move(n)));
}

Instr Instr::allocate(Target target, std::optional<unsigned> size, Scope scope) {
    Node n;
    n.kind = Kind::Allocate;
    n.target = std::move(target);
    n.size = size;
    n.scope = scope;
    return build(std::move(n));
}

Instr Instr::deallocate(Target target, std::optional<unsigned> size) {
    Node n;
    n.kind = Kind::Deallocate;
    n.target = std::move(target);
    n.size = size;
    return build(std::move(n));
}

Instr Instr::assign(Target target, Expr value) {
    Node n;
    n.kind = Kind::Assign;
    n.target = std::move(target);
    n.expr = std::move(value);
    return build(std::move(n));
}

Instr Instr::create_tag(std::string name, Expr value) {
    Node n;
    n.kind = Kind::CreateTag;
    n.name = std::move(name);
    n.expr = std::move(value);
    return build(std::move(n));
}

Instr Instr::destroy_tag(std::string name) {
    Node n;
    n.kind = Kind::DestroyTag;
    n.name = std::move(name);
    return build(std::move(n));
}

Instr Instr::constrain(std::optional<Target> target, Cond cond) {
    if (!target && cond.has_open())
        throw std::invalid_argument("Constrain without a target needs complete comparisons");
    Node n;
    n.kind = Kind::Constrain;
    n.target = std::move(target);
    n.cond = std::move(cond);
    return build(std::move(n));
}

Instr Instr::fail(std::string message) {
    Node n;
    n.kind = Kind::Fail;
    n.name = std::move(message);
    return build(std::move(n));
}

Instr Instr::if_(Cond cond, Instr then_branch, Instr else_branch) {
    if (cond.has_open())
        throw std::invalid_argument("If condition needs complete comparisons");
    Node n;
    n.kind = Kind::If;
    n.cond = std::move(cond);
    n.children = {std::move(then_branch), std::move(else_branch)};
    return build(std::move(n));
}

Instr Instr::for_(std::string binder, std::string pattern, Instr body) {
    Node n;
    n.kind = Kind::For;
    n.name = std::move(binder);
    n.pattern = std::move(pattern);
    n.children = {std::move(body)};
    return build(std::move(n));
}

Instr Instr::forward(unsigned port) {
    Node n;
    n.kind = Kind::Forward;
    n.ports = {port};
    return build(std::move(n));
}

Instr Instr::fork(std::vector<unsigned> ports) {
    Node n;
    n.kind = Kind::Fork;
    n.ports = std::move(ports);
    return build(std::move(n));
}

Instr Instr::block(std::vector<Instr> items) {
    Node n;
    n.kind = Kind::Block;
    n.children = std::move(items);
    return build(std::move(n));
}

Instr Instr::noop() {
    Node n;
    n.kind = Kind::NoOp;
    return build(std::move(n));
}

Instr::Kind Instr::kind() const noexcept { return node_->kind; }
const Target& Instr::target() const {
    if (!node_->target)
        throw std::logic_error("instruction has no target");
    return *node_->target;
}
bool Instr::has_target() const { return node_->target.has_value(); }
std::optional<unsigned> Instr::size() const { return node_->size; }
Scope Instr::scope() const { return node_->scope; }
const Expr& Instr::expr() const { return *node_->expr; }
const std::string& Instr::name() const { return node_->name; }
const std::string& Instr::pattern() const { return node_->pattern; }
const Cond& Instr::cond() const { return *node_->cond; }
const std::vector<Instr>& Instr::children() const { return node_->children; }
const std::vector<unsigned>& Instr::ports() const { return node_->ports; }
std::size_t Instr::subtree_size() const noexcept { return node_->subtree; }

bool operator==(const Instr& a, const Instr& b) {
    if (a.node_ == b.node_)
        return true;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    return x.kind == y.kind && x.target == y.target && x.size == y.size && x.scope == y.scope && x.expr == y.expr &&
           x.name == y.name && x.pattern == y.pattern && x.cond == y.cond && x.children == y.children &&
           x.ports == y.ports;
}

// ---- shorthands ----

const ShorthandTable& ShorthandTable::builtin() {
    static const ShorthandTable table = [] {
        ShorthandTable t;
        const auto add = [&t](const char* name, const char* tag, std::int64_t off, unsigned w) {
            t.add({name, tag, off, w});
        };
        add("EtherDst", "L2", 0, 48);
        add("EtherSrc", "L2", 48, 48);
        add("EtherProto", "L2", 96, 16);

        add("IpVersion", "L3", 0, 4);
        add("IpHeaderLength", "L3", 4, 4);
        add("IpTos", "L3", 8, 8);
        add("IpLength", "L3", 16, 16);
        add("IpID", "L3", 32, 16);
        add("IpFlags", "L3", 48, 3);
        add("IpFragmentOffset", "L3", 51, 13);
        add("TTL", "L3", 64, 8);
        add("IPProto", "L3", 72, 8);
        add("IpChecksum", "L3", 80, 16);
        add("IpSrc", "L3", 96, 32);
        add("IpDst", "L3", 128, 32);

        add("TcpSrc", "L4", 0, 16);
        add("TcpDst", "L4", 16, 16);
        add("TcpSeq", "L4", 32, 32);
        add("TcpAck", "L4", 64, 32);
        add("TcpDataOffset", "L4", 96, 4);
        add("TcpReserved", "L4", 100, 3);
        add("TcpFlags", "L4", 103, 9);
        add("TcpWindow", "L4", 112, 16);
        add("TcpChecksum", "L4", 128, 16);
        add("TcpUrgent", "L4", 144, 16);
        add("TcpPayload", "L4", 160, 64);

        add("UdpSrc", "L4", 0, 16);
        add("UdpDst", "L4", 16, 16);
        add("UdpLength", "L4", 32, 16);
        add("UdpChecksum", "L4", 48, 16);

        add("TCPSrc", "L4", 0, 16);
        add("TCPDst", "L4", 16, 16);
        add("IPSrc", "L3", 96, 32);
        add("IPDst", "L3", 128, 32);
        return t;
    }();
    return table;
}

void ShorthandTable::add(FieldShorthand f) {
    if (f.width == 0 || f.width > kMaxWidth)
        throw PathError(ErrorKind::WidthTooLarge, f.name + " width " + std::to_string(f.width));
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const FieldShorthand& e) { return e.name == f.name; });
    if (it != entries_.end())
        *it = std::move(f);
    else
        entries_.push_back(std::move(f));
}

const FieldShorthand* ShorthandTable::find(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name)
            return &e;
    return nullptr;
}

const FieldShorthand* ShorthandTable::find_address(std::string_view tag, std::int64_t offset) const {
    for (const auto& e : entries_)
        if (e.tag == tag && e.offset == offset)
            return &e;
    return nullptr;
}

const FieldShorthand& shorthand(std::string_view name, const ShorthandTable& table) {
    if (const auto* f = table.find(name))
        return *f;
    throw PathError(ErrorKind::UnknownShorthand, std::string(name));
}

Expr expand_shorthand(std::string_view name, const ShorthandTable& table) {
    const auto& f = shorthand(name, table);
    return Expr::header(Expr::tag(f.tag) + f.offset, f.width);
}

Target field(std::string_view name, const ShorthandTable& table) {
    const auto& f = shorthand(name, table);
    return Target::header(Expr::tag(f.tag) + f.offset, f.width);
}

std::optional<std::pair<std::string, std::int64_t>> tag_offset(const Expr& address) {
    if (address.kind() == Expr::Kind::Tag)
        return std::pair{address.name(), std::int64_t{0}};
    if ((address.kind() == Expr::Kind::Add || address.kind() == Expr::Kind::Sub) &&
        address.operand(0).kind() == Expr::Kind::Tag && address.operand(1).kind() == Expr::Kind::Literal) {
        const auto v = static_cast<std::int64_t>(address.operand(1).value());
        return std::pair{address.operand(0).name(), address.kind() == Expr::Kind::Add ? v : -v};
    }
    return std::nullopt;
}

// ---- printing ----

namespace {

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + '"';
}

// Literal forms of an address that still print as the shorthand name.
const FieldShorthand* shorthand_for(const Expr& address, std::optional<unsigned> width, const ShorthandTable& table) {
    const auto to = tag_offset(address);
    if (!to || !width)
        return nullptr;
    for (const auto& f : table.entries())
        if (f.tag == to->first && f.offset == to->second && f.width == *width &&
            expand_shorthand(f.name, table).operand(0) == address)
            return &f;
    return nullptr;
}

std::string print_expr(const Expr& e, const ShorthandTable& table);

std::string print_address(const Expr& address, std::optional<unsigned> width, const ShorthandTable& table) {
    if (const auto* f = shorthand_for(address, width, table))
        return f->name;
    std::string out = "Header(" + print_expr(address, table);
    if (width)
        out += ", " + std::to_string(*width);
    return out + ")";
}

std::string print_expr(const Expr& e, const ShorthandTable& table) {
    switch (e.kind()) {
    case Expr::Kind::Literal: return std::to_string(e.value());
    case Expr::Kind::Symbol: return "SymbolicValue()";
    case Expr::Kind::Header: return print_address(e.operand(0), e.width(), table);
    case Expr::Kind::Meta: return quote(e.name());
    case Expr::Kind::Tag: return "Tag(" + quote(e.name()) + ")";
    case Expr::Kind::Add:
    case Expr::Kind::Sub: {
        const Expr& r = e.operand(1);
        std::string rs = print_expr(r, table);
        if (r.kind() == Expr::Kind::Add || r.kind() == Expr::Kind::Sub)
            rs = "(" + rs + ")";
        return print_expr(e.operand(0), table) + (e.kind() == Expr::Kind::Add ? " + " : " - ") + rs;
    }
    case Expr::Kind::Neg: {
        const Expr& o = e.operand(0);
        const bool simple = o.kind() != Expr::Kind::Add && o.kind() != Expr::Kind::Sub && o.kind() != Expr::Kind::Neg;
        return simple ? "-" + print_expr(o, table) : "-(" + print_expr(o, table) + ")";
    }
    }
    return {};
}

std::string print_target(const Target& t, const ShorthandTable& table) {
    return t.is_meta ? quote(t.key) : print_address(*t.address, t.width, table);
}

std::string print_cond(const Cond& c, const ShorthandTable& table) {
    switch (c.kind()) {
    case Cond::Kind::True: return "true";
    case Cond::Kind::False: return "false";
    case Cond::Kind::Cmp: {
        std::string out;
        if (c.lhs())
            out = print_expr(*c.lhs(), table) + " ";
        return out + std::string(to_string(c.op())) + " " + print_expr(c.rhs(), table);
    }
    case Cond::Kind::Not: {
        const Cond& o = c.children()[0];
        if (o.kind() == Cond::Kind::True || o.kind() == Cond::Kind::False)
            return "!" + print_cond(o, table);
        return "!(" + print_cond(o, table) + ")";
    }
    case Cond::Kind::And:
    case Cond::Kind::Or: {
        if (c.children().empty())
            return c.kind() == Cond::Kind::And ? "All()" : "Any()";
        if (c.children().size() == 1)
            return std::string(c.kind() == Cond::Kind::And ? "All(" : "Any(") + print_cond(c.children()[0], table) +
                   ")";
        std::string out;
        const char* sep = c.kind() == Cond::Kind::And ? " & " : " | ";
        for (std::size_t i = 0; i < c.children().size(); ++i) {
            const Cond& k = c.children()[i];
            std::string s = print_cond(k, table);
            if (k.kind() == Cond::Kind::And || k.kind() == Cond::Kind::Or)
                s = "(" + s + ")";
            if (i)
                out += sep;
            out += s;
        }
        return out;
    }
    }
    return {};
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

std::string print_ports(const std::vector<unsigned>& ports) {
    std::string out;
    for (std::size_t i = 0; i < ports.size(); ++i) {
        if (i)
            out += ", ";
        out += "OutputPort(" + std::to_string(ports[i]) + ")";
    }
    return out;
}

std::string print_instr(const Instr& in, const ShorthandTable& table, int indent) {
    const std::string p = pad(indent);
    switch (in.kind()) {
    case Instr::Kind::Allocate: {
        std::string out = p + "Allocate(" + print_target(in.target(), table);
        if (in.size())
            out += ", " + std::to_string(*in.size());
        if (in.scope() == Scope::Local)
            out += ", local";
        return out + ")";
    }
    case Instr::Kind::Deallocate: {
        std::string out = p + "Deallocate(" + print_target(in.target(), table);
        if (in.size())
            out += ", " + std::to_string(*in.size());
        return out + ")";
    }
    case Instr::Kind::Assign:
        return p + "Assign(" + print_target(in.target(), table) + ", " + print_expr(in.expr(), table) + ")";
    case Instr::Kind::CreateTag: return p + "CreateTag(" + quote(in.name()) + ", " + print_expr(in.expr(), table) + ")";
    case Instr::Kind::DestroyTag: return p + "DestroyTag(" + quote(in.name()) + ")";
    case Instr::Kind::Constrain:
        if (in.has_target())
            return p + "Constrain(" + print_target(in.target(), table) + ", " + print_cond(in.cond(), table) + ")";
        return p + "Constrain(" + print_cond(in.cond(), table) + ")";
    case Instr::Kind::Fail: return p + "Fail(" + quote(in.name()) + ")";
    case Instr::Kind::If:
        return p + "If(" + print_cond(in.cond(), table) + ",\n" + print_instr(in.children()[0], table, indent + 1) +
               ",\n" + print_instr(in.children()[1], table, indent + 1) + ")";
    case Instr::Kind::For:
        return p + "For(" + in.name() + " in " + quote(in.pattern()) + ",\n" +
               print_instr(in.children()[0], table, indent + 1) + ")";
    case Instr::Kind::Forward: return p + "Forward(" + print_ports(in.ports()) + ")";
    case Instr::Kind::Fork: return p + "Fork(" + print_ports(in.ports()) + ")";
    case Instr::Kind::Block: {
        if (in.children().empty())
            return p + "InstructionBlock()";
        std::string out = p + "InstructionBlock(\n";
        for (std::size_t i = 0; i < in.children().size(); ++i) {
            out += print_instr(in.children()[i], table, indent + 1);
            out += i + 1 < in.children().size() ? ",\n" : ")";
        }
        return out;
    }
    case Instr::Kind::NoOp: return p + "NoOp";
    }
    return {};
}

// Port bodies print a block of two or more items as a flat list.
std::string print_body(const Instr& in, const ShorthandTable& table) {
    if (in.kind() != Instr::Kind::Block || in.children().size() < 2)
        return print_instr(in, table, 1) + "\n";
    std::string out;
    for (const auto& c : in.children())
        out += print_instr(c, table, 1) + "\n";
    return out;
}

} // namespace

std::string print(const Expr& e, const ShorthandTable& table) { return print_expr(e, table); }
std::string print(const Cond& c, const ShorthandTable& table) { return print_cond(c, table); }
std::string print(const Instr& i, const ShorthandTable& table, int indent) { return print_instr(i, table, indent); }

std::string print(const ElementCode& code, const ShorthandTable& table) {
    std::string out;
    for (const auto& [port, body] : code.inputs)
        out += "InputPort(" + (port ? std::to_string(*port) : std::string("*")) + "):\n" + print_body(body, table);
    for (const auto& [port, body] : code.outputs)
        out += "OutputPort(" + std::to_string(port) + "):\n" + print_body(body, table);
    return out;
}

// ---- binder substitution ----

namespace {

std::string replace_binder(const std::string& s, std::string_view binder, std::string_view key) {
    if (s.find("${") == std::string::npos)
        return s;
    std::size_t digits = key.size();
    while (digits > 0 && key[digits - 1] >= '0' && key[digits - 1] <= '9')
        --digits;
    const std::string plain = "${" + std::string(binder) + "}";
    const std::string number = "${" + std::string(binder) + ".N}";
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        if (s.compare(i, plain.size(), plain) == 0) {
            out += key;
            i += plain.size();
        } else if (s.compare(i, number.size(), number) == 0) {
            out += key.substr(digits);
            i += number.size();
        } else {
            out += s[i++];
        }
    }
    return out;
}

Expr subst(const Expr& e, std::string_view b, std::string_view k) {
    switch (e.kind()) {
    case Expr::Kind::Literal:
    case Expr::Kind::Symbol: return e;
    case Expr::Kind::Header: return Expr::header(subst(e.operand(0), b, k), e.width());
    case Expr::Kind::Meta: return Expr::meta(replace_binder(e.name(), b, k));
    case Expr::Kind::Tag: return Expr::tag(replace_binder(e.name(), b, k));
    case Expr::Kind::Add: return Expr::add(subst(e.operand(0), b, k), subst(e.operand(1), b, k));
    case Expr::Kind::Sub: return Expr::sub(subst(e.operand(0), b, k), subst(e.operand(1), b, k));
    case Expr::Kind::Neg: return Expr::neg(subst(e.operand(0), b, k));
    }
    return e;
}

Target subst(const Target& t, std::string_view b, std::string_view k) {
    if (t.is_meta)
        return Target::meta(replace_binder(t.key, b, k));
    return Target::header(subst(*t.address, b, k), t.width);
}

Cond subst(const Cond& c, std::string_view b, std::string_view k) {
    switch (c.kind()) {
    case Cond::Kind::True:
    case Cond::Kind::False: return c;
    case Cond::Kind::Cmp:
        if (c.lhs())
            return Cond::cmp(c.op(), subst(*c.lhs(), b, k), subst(c.rhs(), b, k));
        return Cond::open(c.op(), subst(c.rhs(), b, k));
    case Cond::Kind::Not: return Cond::negation(subst(c.children()[0], b, k));
    case Cond::Kind::And:
    case Cond::Kind::Or: {
        std::vector<Cond> kids;
        for (const auto& x : c.children())
            kids.push_back(subst(x, b, k));
        return c.kind() == Cond::Kind::And ? Cond::all(std::move(kids)) : Cond::any(std::move(kids));
    }
    }
    return c;
}

} // namespace

Instr substitute_binder(const Instr& in, std::string_view b, std::string_view k) {
    switch (in.kind()) {
    case Instr::Kind::Allocate: return Instr::allocate(subst(in.target(), b, k), in.size(), in.scope());
    case Instr::Kind::Deallocate: return Instr::deallocate(subst(in.target(), b, k), in.size());
    case Instr::Kind::Assign: return Instr::assign(subst(in.target(), b, k), subst(in.expr(), b, k));
    case Instr::Kind::CreateTag: return Instr::create_tag(replace_binder(in.name(), b, k), subst(in.expr(), b, k));
    case Instr::Kind::DestroyTag: return Instr::destroy_tag(replace_binder(in.name(), b, k));
    case Instr::Kind::Constrain:
        return Instr::constrain(in.has_target() ? std::optional<Target>(subst(in.target(), b, k)) : std::nullopt,
                                subst(in.cond(), b, k));
    case Instr::Kind::Fail: return Instr::fail(replace_binder(in.name(), b, k));
    case Instr::Kind::If:
        return Instr::if_(subst(in.cond(), b, k), substitute_binder(in.children()[0], b, k),
                          substitute_binder(in.children()[1], b, k));
    case Instr::Kind::For:
        if (in.name() == b)
            return in;
        return Instr::for_(in.name(), in.pattern(), substitute_binder(in.children()[0], b, k));
    case Instr::Kind::Block: {
        std::vector<Instr> items;
        for (const auto& c : in.children())
            items.push_back(substitute_binder(c, b, k));
        return Instr::block(std::move(items));
    }
    case Instr::Kind::Forward:
    case Instr::Kind::Fork:
    case Instr::Kind::NoOp: return in;
    }
    return in;
}

} // namespace symnet
