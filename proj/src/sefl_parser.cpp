#include "symnet/error.hpp"
#include "symnet/sefl.hpp"

#include <cctype>
#include <charconv>
#include <limits>

namespace symnet {

namespace {

struct Token {
    enum Kind { Ident, Number, String, Punct, End } kind = End;
    std::string text;
    std::uint64_t number = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    explicit Lexer(std::string_view text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip();
            Token t;
            t.line = line_;
            t.column = col_;
            if (i_ >= s_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = s_[i_];
            if (std::size_t n = mac_length(); n) {
                t.kind = Token::Number;
                t.text = std::string(s_.substr(i_, n));
                for (char x : t.text)
                    if (x != ':')
                        t.number = t.number * 16 + hex_value(x);
                advance(n);
            } else if (std::size_t m = ipv4_length(); m) {
                t.kind = Token::Number;
                t.text = std::string(s_.substr(i_, m));
                t.number = parse_ipv4(t.text, t.line, t.column);
                advance(m);
            } else if (is_digit(c)) {
                number(t);
            } else if (ident_start(c)) {
                std::size_t j = i_;
                while (j < s_.size() && ident_char(s_[j]))
                    ++j;
                t.kind = Token::Ident;
                t.text = std::string(s_.substr(i_, j - i_));
                advance(j - i_);
            } else if (c == '"') {
                string(t);
            } else {
                static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "&&", "||"};
                t.kind = Token::Punct;
                for (auto op : two)
                    if (s_.substr(i_, 2) == op)
                        t.text = std::string(op);
                if (t.text.empty()) {
                    if (std::string_view("(),:+-!&|<>*").find(c) == std::string_view::npos)
                        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
                    t.text = std::string(1, c);
                }
                advance(t.text.size());
            }
            out.push_back(std::move(t));
        }
    }

    static std::uint64_t parse_ipv4(std::string_view text, std::size_t line, std::size_t col) {
        std::uint64_t out = 0;
        std::size_t pos = 0;
        for (int part = 0; part < 4; ++part) {
            std::size_t j = pos;
            while (j < text.size() && is_digit(text[j]))
                ++j;
            if (j == pos || j - pos > 3)
                throw ParseError("malformed IPv4 address " + std::string(text), line, col);
            unsigned v = 0;
            std::from_chars(text.data() + pos, text.data() + j, v);
            if (v > 255)
                throw ParseError("malformed IPv4 address " + std::string(text), line, col);
            out = (out << 8) | v;
            pos = j;
            if (part < 3) {
                if (pos >= text.size() || text[pos] != '.')
                    throw ParseError("malformed IPv4 address " + std::string(text), line, col);
                ++pos;
            }
        }
        if (pos != text.size())
            throw ParseError("malformed IPv4 address " + std::string(text), line, col);
        return out;
    }

private:
    static std::uint64_t hex_value(char c) {
        if (is_digit(c))
            return static_cast<std::uint64_t>(c - '0');
        return static_cast<std::uint64_t>(std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
    }

    void advance(std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i_) {
            if (s_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    void skip() {
        while (i_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
                advance(1);
            } else if (s_.substr(i_, 2) == "//") {
                while (i_ < s_.size() && s_[i_] != '\n')
                    advance(1);
            } else {
                break;
            }
        }
    }

    std::size_t mac_length() const {
        if (s_.size() - i_ < 17)
            return 0;
        for (std::size_t k = 0; k < 17; ++k) {
            const char c = s_[i_ + k];
            if (k % 3 == 2 ? c != ':' : !is_hex(c))
                return 0;
        }
        if (i_ + 17 < s_.size() && (ident_char(s_[i_ + 17]) || s_[i_ + 17] == ':'))
            return 0;
        return 17;
    }

    std::size_t ipv4_length() const {
        std::size_t j = i_;
        int dots = 0;
        while (j < s_.size() && (is_digit(s_[j]) || s_[j] == '.')) {
            if (s_[j] == '.')
                ++dots;
            ++j;
        }
        if (dots != 3 || !is_digit(s_[i_]))
            return 0;
        return j - i_;
    }

    void number(Token& t) {
        t.kind = Token::Number;
        std::size_t j = i_;
        int base = 10;
        if (s_.substr(i_, 2) == "0x" || s_.substr(i_, 2) == "0X") {
            base = 16;
            j += 2;
        } else if (s_.substr(i_, 2) == "0b" || s_.substr(i_, 2) == "0B") {
            base = 2;
            j += 2;
        }
        const std::size_t digits = j;
        while (j < s_.size() && ident_char(s_[j]))
            ++j;
        t.text = std::string(s_.substr(i_, j - i_));
        const auto* first = s_.data() + digits;
        const auto* last = s_.data() + j;
        auto [ptr, ec] = std::from_chars(first, last, t.number, base);
        if (first == last || ec != std::errc() || ptr != last)
            throw ParseError("malformed number " + t.text, line_, col_);
        advance(j - i_);
    }

    void string(Token& t) {
        t.kind = Token::String;
        const std::size_t line = line_, col = col_;
        advance(1);
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size())
                advance(1);
            if (s_[i_] == '\n')
                throw ParseError("unterminated string", line, col);
            t.text += s_[i_];
            advance(1);
        }
        if (i_ >= s_.size())
            throw ParseError("unterminated string", line, col);
        advance(1);
    }

    std::string_view s_;
    std::size_t i_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

std::optional<CmpOp> cmp_op(const Token& t) {
    if (t.kind != Token::Punct)
        return std::nullopt;
    if (t.text == "==")
        return CmpOp::Eq;
    if (t.text == "!=")
        return CmpOp::Ne;
    if (t.text == "<")
        return CmpOp::Lt;
    if (t.text == "<=")
        return CmpOp::Le;
    if (t.text == ">")
        return CmpOp::Gt;
    if (t.text == ">=")
        return CmpOp::Ge;
    return std::nullopt;
}

class Parser {
public:
    Parser(std::string_view text, const ShorthandTable& table)
        : toks_(Lexer(text).run())
        , table_(table) {}

    ElementCode element() {
        ElementCode code;
        if (!at_section()) {
            Instr body = sequence();
            expect_end();
            code.inputs.emplace_back(std::nullopt, std::move(body));
            return code;
        }
        while (!at(Token::End)) {
            if (!at_section())
                fail("expected InputPort(n): or OutputPort(n):");
            const bool input = peek().text == "InputPort";
            next();
            expect("(");
            std::optional<unsigned> port;
            if (input && accept("*")) {
            } else {
                port = small_number("port index");
            }
            expect(")");
            expect(":");
            Instr body = sequence();
            if (input)
                code.inputs.emplace_back(port, std::move(body));
            else
                code.outputs.emplace_back(*port, std::move(body));
        }
        return code;
    }

    Instr instructions() {
        Instr body = sequence();
        expect_end();
        return body;
    }

    Cond condition_only() {
        Cond c = condition();
        expect_end();
        return c;
    }

private:
    // ---- token helpers ----

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at(Token::Kind k) const { return peek().kind == k; }
    bool at_punct(std::string_view p, std::size_t k = 0) const {
        return peek(k).kind == Token::Punct && peek(k).text == p;
    }
    bool at_ident(std::string_view name) const { return peek().kind == Token::Ident && peek().text == name; }
    bool accept(std::string_view p) {
        if (at_punct(p)) {
            next();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }

    void expect(std::string_view p) {
        if (!accept(p))
            fail("expected '" + std::string(p) + "'" + found());
    }

    void expect_end() {
        if (!at(Token::End))
            fail("unexpected input" + found());
    }

    std::string found() const {
        const Token& t = peek();
        if (t.kind == Token::End)
            return ", found end of input";
        return ", found '" + (t.kind == Token::String ? "\"" + t.text + "\"" : t.text) + "'";
    }

    std::string string_literal(const char* what) {
        if (!at(Token::String))
            fail(std::string("expected ") + what + found());
        return next().text;
    }

    unsigned small_number(const char* what) {
        if (!at(Token::Number))
            fail(std::string("expected ") + what + found());
        const auto v = next().number;
        if (v > std::numeric_limits<unsigned>::max())
            fail(std::string(what) + " out of range");
        return static_cast<unsigned>(v);
    }

    bool at_section() const {
        return peek().kind == Token::Ident && (peek().text == "InputPort" || peek().text == "OutputPort") &&
               at_punct("(", 1);
    }

    bool is_binder(const std::string& name) const {
        for (const auto& b : binders_)
            if (b == name)
                return true;
        return false;
    }

    // ---- instructions ----

    Instr sequence() {
        std::vector<Instr> items;
        while (!at(Token::End) && !at_section()) {
            items.push_back(instruction());
            if (!accept(","))
                if (at(Token::End) || at_section() || !at(Token::Ident))
                    break;
        }
        if (items.size() == 1)
            return std::move(items[0]);
        return Instr::block(std::move(items));
    }

    Instr instruction() {
        if (!at(Token::Ident))
            fail("expected an instruction" + found());
        const Token kw = next();
        const std::string& k = kw.text;
        if (k == "NoOp") {
            if (accept("("))
                expect(")");
            return Instr::noop();
        }
        expect("(");
        Instr out = Instr::noop();
        if (k == "Allocate") {
            Target t = target();
            std::optional<unsigned> size;
            Scope scope = Scope::Global;
            if (accept(",")) {
                if (at(Token::Number)) {
                    size = small_number("size");
                    if (accept(","))
                        scope = scope_word();
                } else {
                    scope = scope_word();
                }
            }
            out = Instr::allocate(std::move(t), size, scope);
        } else if (k == "Deallocate") {
            Target t = target();
            std::optional<unsigned> size;
            if (accept(","))
                size = small_number("size");
            out = Instr::deallocate(std::move(t), size);
        } else if (k == "Assign") {
            Target t = target();
            expect(",");
            out = Instr::assign(std::move(t), expression());
        } else if (k == "CreateTag") {
            std::string name = string_literal("tag name");
            expect(",");
            out = Instr::create_tag(std::move(name), expression());
        } else if (k == "DestroyTag") {
            out = Instr::destroy_tag(string_literal("tag name"));
        } else if (k == "Constrain") {
            auto [t, c] = constrain_args();
            out = Instr::constrain(std::move(t), std::move(c));
        } else if (k == "Fail") {
            out = Instr::fail(string_literal("message"));
        } else if (k == "If") {
            Cond c = condition();
            if (c.has_open())
                fail("If condition needs a left operand");
            expect(",");
            Instr a = instruction();
            Instr b = Instr::noop();
            if (accept(","))
                b = instruction();
            out = Instr::if_(std::move(c), std::move(a), std::move(b));
        } else if (k == "For") {
            if (!at(Token::Ident))
                fail("expected loop variable" + found());
            std::string binder = next().text;
            if (!at_ident("in"))
                fail("expected 'in'" + found());
            next();
            std::string pattern = string_literal("key pattern");
            expect(",");
            binders_.push_back(binder);
            Instr body = instruction();
            binders_.pop_back();
            out = Instr::for_(std::move(binder), std::move(pattern), std::move(body));
        } else if (k == "Forward") {
            out = Instr::forward(port_ref());
        } else if (k == "Fork") {
            std::vector<unsigned> ports{port_ref()};
            while (accept(","))
                ports.push_back(port_ref());
            out = Instr::fork(std::move(ports));
        } else if (k == "InstructionBlock") {
            std::vector<Instr> items;
            if (!at_punct(")")) {
                items.push_back(instruction());
                while (accept(","))
                    items.push_back(instruction());
            }
            out = Instr::block(std::move(items));
        } else {
            throw ParseError("unknown instruction " + k, kw.line, kw.column);
        }
        expect(")");
        return out;
    }

    Scope scope_word() {
        if (at_ident("local")) {
            next();
            return Scope::Local;
        }
        if (at_ident("global")) {
            next();
            return Scope::Global;
        }
        fail("expected local or global" + found());
    }

    unsigned port_ref() {
        if (at_ident("OutputPort")) {
            next();
            expect("(");
            const unsigned p = small_number("port index");
            expect(")");
            return p;
        }
        return small_number("port index");
    }

    // Target then ',' then condition, or a complete condition.
    std::pair<std::optional<Target>, Cond> constrain_args() {
        const std::size_t save = pos_;
        try {
            Target t = target();
            if (accept(",")) {
                Cond c = condition();
                return {std::move(t), std::move(c)};
            }
        } catch (const ParseError&) {
        }
        pos_ = save;
        Cond c = condition();
        if (c.has_open())
            fail("comparison needs a left operand");
        return {std::nullopt, std::move(c)};
    }

    Target target() {
        const Token& t = peek();
        if (t.kind == Token::String) {
            next();
            return Target::meta(t.text);
        }
        if (t.kind == Token::Ident && is_binder(t.text)) {
            next();
            return Target::meta("${" + t.text + "}");
        }
        Expr e = expression();
        if (e.kind() == Expr::Kind::Header)
            return Target::header(e.operand(0), e.width());
        if (e.kind() == Expr::Kind::Meta)
            return Target::meta(e.name());
        if (e.kind() == Expr::Kind::Tag || e.kind() == Expr::Kind::Add || e.kind() == Expr::Kind::Sub ||
            e.kind() == Expr::Kind::Literal)
            return Target::header(e);
        throw ParseError("expected a header address or metadata key", t.line, t.column);
    }

    // ---- expressions ----

    Expr expression() {
        Expr lhs = unary();
        for (;;) {
            if (accept("+"))
                lhs = Expr::add(std::move(lhs), unary());
            else if (accept("-"))
                lhs = Expr::sub(std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        if (accept("-"))
            return Expr::neg(unary());
        return primary();
    }

    Expr primary() {
        const Token t = peek();
        switch (t.kind) {
        case Token::Number: next(); return Expr::literal(t.number);
        case Token::String: next(); return Expr::meta(t.text);
        case Token::Punct:
            if (accept("(")) {
                Expr e = expression();
                expect(")");
                return e;
            }
            fail("expected an expression" + found());
        case Token::End: fail("expected an expression" + found());
        case Token::Ident: break;
        }
        next();
        const std::string& n = t.text;
        if (n == "Tag") {
            expect("(");
            std::string name = string_literal("tag name");
            expect(")");
            return Expr::tag(std::move(name));
        }
        if (n == "Header") {
            expect("(");
            Expr addr = expression();
            std::optional<unsigned> w;
            if (accept(","))
                w = small_number("width");
            expect(")");
            return Expr::header(std::move(addr), w);
        }
        if (n == "SymbolicValue") {
            expect("(");
            expect(")");
            return Expr::symbolic();
        }
        if (n == "SymbolicVariable")
            return Expr::symbolic();
        if (n == "ConstantValue") {
            expect("(");
            Expr e = expression();
            expect(")");
            return e;
        }
        if (n == "ipToNumber") {
            expect("(");
            const Token s = peek();
            std::string text = string_literal("address");
            expect(")");
            return Expr::literal(Lexer::parse_ipv4(text, s.line, s.column));
        }
        if (is_binder(n))
            return Expr::meta("${" + n + "}");
        if (const auto* f = table_.find(n))
            return Expr::header(Expr::tag(f->tag) + f->offset, f->width);
        throw ParseError(std::string(to_string(ErrorKind::UnknownShorthand)) + ": " + n, t.line, t.column);
    }

    // ---- conditions ----

    Cond condition() {
        std::vector<Cond> items{conjunction()};
        while (accept("|") || accept("||")) {
            const Token here = peek();
            const std::size_t save = pos_;
            // `a == x | y` reuses the comparison on the left for a bare operand.
            if (items.back().kind() == Cond::Kind::Cmp && !cmp_op(peek())) {
                try {
                    Expr e = expression();
                    if (!cmp_op(peek()) && !at_punct("&") && !at_punct("&&")) {
                        const Cond& last = items.back();
                        items.push_back(last.lhs() ? Cond::cmp(last.op(), *last.lhs(), std::move(e))
                                                   : Cond::open(last.op(), std::move(e)));
                        continue;
                    }
                } catch (const ParseError&) {
                }
                pos_ = save;
            }
            items.push_back(conjunction());
        }
        if (items.size() == 1)
            return std::move(items[0]);
        return Cond::any(std::move(items));
    }

    Cond conjunction() {
        std::vector<Cond> items{negation()};
        while (accept("&") || accept("&&"))
            items.push_back(negation());
        if (items.size() == 1)
            return std::move(items[0]);
        return Cond::all(std::move(items));
    }

    Cond negation() {
        if (accept("!"))
            return Cond::negation(negation());
        if (at_ident("true") || at_ident("false"))
            return Cond::truth(next().text == "true");
        if ((at_ident("All") || at_ident("Any")) && at_punct("(", 1)) {
            const bool all = next().text == "All";
            expect("(");
            std::vector<Cond> items;
            if (!at_punct(")")) {
                items.push_back(condition());
                while (accept(","))
                    items.push_back(condition());
            }
            expect(")");
            return all ? Cond::all(std::move(items)) : Cond::any(std::move(items));
        }
        if (at_ident("Constrain") && at_punct("(", 1)) {
            next();
            expect("(");
            auto [t, c] = constrain_args();
            expect(")");
            return t ? c.fill(t->as_expr()) : c;
        }
        if (at_punct("(")) {
            const std::size_t save = pos_;
            try {
                next();
                Cond c = condition();
                expect(")");
                if (!cmp_op(peek()) && !at_punct("+") && !at_punct("-"))
                    return c;
            } catch (const ParseError&) {
            }
            pos_ = save;
        }
        return comparison();
    }

    Cond comparison() {
        if (auto op = cmp_op(peek())) {
            next();
            return Cond::open(*op, expression());
        }
        Expr lhs = expression();
        const auto op = cmp_op(peek());
        if (!op)
            fail("expected a comparison operator" + found());
        next();
        return Cond::cmp(*op, std::move(lhs), expression());
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const ShorthandTable& table_;
    std::vector<std::string> binders_;
};

} // namespace

ElementCode parse_sefl(std::string_view text, const ShorthandTable& table) { return Parser(text, table).element(); }

Instr parse_instructions(std::string_view text, const ShorthandTable& table) {
    return Parser(text, table).instructions();
}

Cond parse_condition(std::string_view text, const ShorthandTable& table) {
    return Parser(text, table).condition_only();
}

} // namespace symnet
