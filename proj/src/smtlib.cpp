#include "symnet/error.hpp"
#include "symnet/solver.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace symnet {

namespace {

std::string sym_name(SymbolId s) { return "s" + std::to_string(s); }

std::string bv(std::uint64_t v, unsigned w) { return "(_ bv" + std::to_string(v) + " " + std::to_string(w) + ")"; }

std::string emit_term(const LinearTerm& t) {
    const unsigned w = t.width();
    const std::uint64_t mask = width_mask(w);
    std::vector<std::string> parts;
    for (const auto& m : t.monomials()) {
        if (m.coeff == 1)
            parts.push_back(sym_name(m.symbol));
        else if (m.coeff == mask)
            parts.push_back("(bvneg " + sym_name(m.symbol) + ")");
        else
            parts.push_back("(bvmul " + bv(m.coeff, w) + " " + sym_name(m.symbol) + ")");
    }
    if (t.constant_part() != 0 || parts.empty())
        parts.push_back(bv(t.constant_part(), w));
    if (parts.size() == 1)
        return parts.front();
    std::string out = "(bvadd";
    for (const auto& p : parts)
        out += " " + p;
    return out + ")";
}

void emit_formula(const Formula& f, std::string& out) {
    switch (f.kind()) {
    case Formula::Kind::True: out += "true"; return;
    case Formula::Kind::False: out += "false"; return;
    case Formula::Kind::Cmp: {
        static constexpr std::array<const char*, 6> ops = {"=", "distinct", "bvult", "bvule", "bvugt", "bvuge"};
        out += "(";
        out += ops[static_cast<int>(f.op())];
        out += " " + emit_term(f.lhs()) + " " + emit_term(f.rhs()) + ")";
        return;
    }
    case Formula::Kind::Not:
        out += "(not ";
        emit_formula(f.children().front(), out);
        out += ")";
        return;
    case Formula::Kind::And:
    case Formula::Kind::Or:
        if (f.children().empty()) {
            out += f.kind() == Formula::Kind::And ? "true" : "false";
            return;
        }
        out += f.kind() == Formula::Kind::And ? "(and" : "(or";
        for (const auto& c : f.children()) {
            out += " ";
            emit_formula(c, out);
        }
        out += ")";
        return;
    }
}

// ---- s-expressions ----

struct SExpr {
    std::string atom;
    std::vector<SExpr> list;
    bool is_list = false;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> out;
        skip();
        while (pos_ < text_.size()) {
            out.push_back(read());
            skip();
        }
        return out;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read() {
        skip();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", line_, col_);
        SExpr e;
        e.line = line_;
        e.column = col_;
        const char c = text_[pos_];
        if (c == '(') {
            e.is_list = true;
            advance();
            for (;;) {
                skip();
                if (pos_ >= text_.size())
                    throw ParseError("unterminated list", e.line, e.column);
                if (text_[pos_] == ')') {
                    advance();
                    break;
                }
                e.list.push_back(read());
            }
            return e;
        }
        if (c == ')')
            throw ParseError("unexpected ')'", line_, col_);
        if (c == '|') {
            advance();
            while (pos_ < text_.size() && text_[pos_] != '|') {
                e.atom += text_[pos_];
                advance();
            }
            if (pos_ >= text_.size())
                throw ParseError("unterminated quoted symbol", e.line, e.column);
            advance();
            return e;
        }
        while (pos_ < text_.size()) {
            const char d = text_[pos_];
            if (d == '(' || d == ')' || d == ';' || std::isspace(static_cast<unsigned char>(d)))
                break;
            e.atom += d;
            advance();
        }
        return e;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

[[noreturn]] void fail(const SExpr& e, const std::string& msg) { throw ParseError(msg, e.line, e.column); }

std::uint64_t parse_decimal(const SExpr& e, std::string_view s) {
    if (s.empty() || s.size() > 20)
        fail(e, "bad numeral '" + std::string(s) + "'");
    unsigned __int128 v = 0;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            fail(e, "bad numeral '" + std::string(s) + "'");
        v = v * 10 + static_cast<unsigned>(c - '0');
        if (v > ~std::uint64_t{0})
            fail(e, "numeral out of range");
    }
    return static_cast<std::uint64_t>(v);
}

/// `#x..`, `#b..` or `(_ bvN w)` -> (value, width)
std::optional<std::pair<std::uint64_t, unsigned>> bv_literal(const SExpr& e) {
    if (!e.is_list) {
        const std::string& a = e.atom;
        if (a.size() > 2 && a[0] == '#' && (a[1] == 'x' || a[1] == 'b')) {
            const bool hex = a[1] == 'x';
            const std::size_t digits = a.size() - 2;
            const unsigned w = static_cast<unsigned>(digits * (hex ? 4 : 1));
            if (w == 0 || w > 64)
                fail(e, "bit-vector literal wider than 64 bits");
            std::uint64_t v = 0;
            for (std::size_t i = 2; i < a.size(); ++i) {
                const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(a[i])));
                unsigned d;
                if (hex && std::isxdigit(static_cast<unsigned char>(c)))
                    d = std::isdigit(static_cast<unsigned char>(c)) ? static_cast<unsigned>(c - '0')
                                                                     : static_cast<unsigned>(c - 'a' + 10);
                else if (!hex && (c == '0' || c == '1'))
                    d = static_cast<unsigned>(c - '0');
                else
                    fail(e, "bad bit-vector literal '" + a + "'");
                v = (v << (hex ? 4 : 1)) | d;
            }
            return std::make_pair(v, w);
        }
        return std::nullopt;
    }
    if (e.list.size() == 3 && !e.list[0].is_list && e.list[0].atom == "_" && !e.list[1].is_list &&
        e.list[1].atom.rfind("bv", 0) == 0 && !e.list[2].is_list) {
        const std::uint64_t v = parse_decimal(e.list[1], std::string_view(e.list[1].atom).substr(2));
        const std::uint64_t w = parse_decimal(e.list[2], e.list[2].atom);
        if (w == 0 || w > 64)
            fail(e, "bit-vector width outside 1..64");
        if ((v & ~width_mask(static_cast<unsigned>(w))) != 0)
            fail(e, "bit-vector literal does not fit its width");
        return std::make_pair(v, static_cast<unsigned>(w));
    }
    return std::nullopt;
}

unsigned parse_sort(const SExpr& e) {
    if (e.is_list && e.list.size() == 3 && e.list[0].atom == "_" && e.list[1].atom == "BitVec") {
        const std::uint64_t w = parse_decimal(e.list[2], e.list[2].atom);
        if (w == 0 || w > 64)
            fail(e, "bit-vector width outside 1..64");
        return static_cast<unsigned>(w);
    }
    fail(e, "only (_ BitVec n) sorts are supported");
}

class QueryBuilder {
public:
    SmtQuery run(const std::vector<SExpr>& commands) {
        // Reserve ids for names of the form s<id> first so other names never collide.
        for (const auto& c : commands) {
            if (c.is_list && !c.list.empty() && (c.list[0].atom == "declare-const" || c.list[0].atom == "declare-fun") &&
                c.list.size() >= 2) {
                if (auto id = numeric_name(c.list[1].atom))
                    next_ = std::max(next_, *id + 1);
            }
        }
        for (const auto& c : commands) {
            if (!c.is_list || c.list.empty() || c.list[0].is_list)
                fail(c, "expected a command");
            const std::string& head = c.list[0].atom;
            if (head == "set-logic" || head == "set-option" || head == "set-info" || head == "check-sat" ||
                head == "get-model" || head == "exit")
                continue;
            if (head == "declare-const") {
                if (c.list.size() != 3)
                    fail(c, "declare-const expects a name and a sort");
                declare(c.list[1], parse_sort(c.list[2]));
            } else if (head == "declare-fun") {
                if (c.list.size() != 4 || !c.list[2].is_list || !c.list[2].list.empty())
                    fail(c, "only nullary declare-fun is supported");
                declare(c.list[1], parse_sort(c.list[3]));
            } else if (head == "assert") {
                if (c.list.size() != 2)
                    fail(c, "assert expects one term");
                query_.assertions.push_back(boolean(c.list[1]));
            } else {
                fail(c, "unsupported command '" + head + "'");
            }
        }
        return std::move(query_);
    }

private:
    static std::optional<SymbolId> numeric_name(const std::string& name) {
        if (name.size() < 2 || name[0] != 's' || name.size() > 20)
            return std::nullopt;
        SymbolId v = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(name[i])))
                return std::nullopt;
            v = v * 10 + static_cast<SymbolId>(name[i] - '0');
        }
        return v;
    }

    void declare(const SExpr& name, unsigned width) {
        if (name.is_list)
            fail(name, "expected a symbol name");
        if (names_.count(name.atom))
            fail(name, "duplicate declaration of '" + name.atom + "'");
        SymbolId id;
        if (auto n = numeric_name(name.atom))
            id = *n;
        else
            id = next_++;
        names_[name.atom] = {id, width};
        query_.widths[id] = width;
    }

    LinearTerm term(const SExpr& e) {
        if (auto lit = bv_literal(e))
            return LinearTerm::constant(lit->second, lit->first);
        if (!e.is_list) {
            auto it = names_.find(e.atom);
            if (it == names_.end())
                fail(e, "undeclared symbol '" + e.atom + "'");
            return LinearTerm::symbol(it->second.second, it->second.first);
        }
        if (e.list.empty() || e.list[0].is_list)
            fail(e, "malformed term");
        const std::string& op = e.list[0].atom;
        std::vector<LinearTerm> args;
        for (std::size_t i = 1; i < e.list.size(); ++i)
            args.push_back(term(e.list[i]));
        const auto same_width = [&] {
            for (const auto& a : args)
                if (a.width() != args.front().width())
                    fail(e, "operands of different width");
        };
        if (op == "bvadd" && !args.empty()) {
            same_width();
            LinearTerm acc = args.front();
            for (std::size_t i = 1; i < args.size(); ++i)
                acc = acc + args[i];
            return acc;
        }
        if (op == "bvsub" && args.size() == 2) {
            same_width();
            return args[0] - args[1];
        }
        if (op == "bvneg" && args.size() == 1)
            return -args[0];
        if (op == "bvmul" && args.size() == 2) {
            same_width();
            if (args[0].is_concrete())
                return args[1].scaled(args[0].constant_part());
            if (args[1].is_concrete())
                return args[0].scaled(args[1].constant_part());
            fail(e, "nonlinear multiplication is outside the fragment");
        }
        fail(e, "unsupported term operator '" + op + "'");
    }

    Formula boolean(const SExpr& e) {
        if (!e.is_list) {
            if (e.atom == "true")
                return Formula::truth(true);
            if (e.atom == "false")
                return Formula::truth(false);
            fail(e, "expected a boolean term");
        }
        if (e.list.empty() || e.list[0].is_list)
            fail(e, "malformed boolean term");
        const std::string& op = e.list[0].atom;
        if (op == "and" || op == "or") {
            std::vector<Formula> kids;
            for (std::size_t i = 1; i < e.list.size(); ++i)
                kids.push_back(boolean(e.list[i]));
            return op == "and" ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
        }
        if (op == "not") {
            if (e.list.size() != 2)
                fail(e, "not expects one operand");
            return Formula::negation(boolean(e.list[1]));
        }
        static const std::map<std::string, CmpOp> cmps = {{"=", CmpOp::Eq},     {"distinct", CmpOp::Ne},
                                                          {"bvult", CmpOp::Lt}, {"bvule", CmpOp::Le},
                                                          {"bvugt", CmpOp::Gt}, {"bvuge", CmpOp::Ge}};
        auto it = cmps.find(op);
        if (it == cmps.end() || e.list.size() != 3)
            fail(e, "unsupported boolean operator '" + op + "'");
        LinearTerm a = term(e.list[1]);
        LinearTerm b = term(e.list[2]);
        if (a.width() != b.width())
            fail(e, "comparison between different widths");
        return Formula::cmp(it->second, std::move(a), std::move(b));
    }

    SmtQuery query_;
    std::map<std::string, std::pair<SymbolId, unsigned>> names_;
    SymbolId next_ = 1;
};

std::string hex_literal(std::uint64_t v, unsigned w) {
    if (w % 4 != 0) {
        std::string out = "#b";
        for (int i = static_cast<int>(w) - 1; i >= 0; --i)
            out += ((v >> i) & 1) ? '1' : '0';
        return out;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#x";
    for (int i = static_cast<int>(w) / 4 - 1; i >= 0; --i)
        out += digits[(v >> (4 * i)) & 0xf];
    return out;
}

} // namespace

std::string to_smtlib(std::span<const Formula> conjunction, const WidthMap& widths) {
    std::string out = "(set-logic QF_BV)\n";
    for (const auto& [s, w] : widths)
        out += "(declare-const " + sym_name(s) + " (_ BitVec " + std::to_string(w) + "))\n";
    for (const auto& f : conjunction) {
        out += "(assert ";
        emit_formula(f, out);
        out += ")\n";
    }
    out += "(check-sat)\n(get-model)\n";
    return out;
}

SmtQuery parse_smtlib(std::string_view text) {
    Reader reader(text);
    return QueryBuilder().run(reader.read_all());
}

std::string format_smt_answer(const SolveResult& result, const WidthMap& widths) {
    if (!result.sat)
        return "unsat\n";
    std::string out = "sat\n(\n";
    for (const auto& [s, w] : widths) {
        auto it = result.model.find(s);
        const std::uint64_t v = it == result.model.end() ? 0 : it->second;
        out += "  (define-fun " + sym_name(s) + " () (_ BitVec " + std::to_string(w) + ") " + hex_literal(v, w) +
               ")\n";
    }
    out += ")\n";
    return out;
}

SolveResult parse_smt_answer(std::string_view text) {
    Reader reader(text);
    const auto items = reader.read_all();
    if (items.empty() || items.front().is_list)
        throw SolverError("solver produced no verdict");
    SolveResult out;
    const std::string& verdict = items.front().atom;
    if (verdict == "unsat")
        return out;
    if (verdict != "sat")
        throw SolverError("solver answered '" + verdict + "'");
    out.sat = true;
    for (std::size_t i = 1; i < items.size(); ++i) {
        const SExpr& block = items[i];
        if (!block.is_list)
            continue;
        std::vector<const SExpr*> defs;
        std::size_t start = 0;
        if (!block.list.empty() && !block.list[0].is_list && block.list[0].atom == "model")
            start = 1;
        for (std::size_t k = start; k < block.list.size(); ++k)
            defs.push_back(&block.list[k]);
        for (const SExpr* d : defs) {
            if (!d->is_list || d->list.size() != 5 || d->list[0].atom != "define-fun")
                continue;
            const std::string& name = d->list[1].atom;
            if (name.size() < 2 || name[0] != 's')
                continue;
            auto lit = bv_literal(d->list[4]);
            if (!lit)
                throw SolverError("unreadable model value for " + name);
            out.model[parse_decimal(d->list[1], std::string_view(name).substr(1))] = lit->first;
        }
    }
    return out;
}

SolveResult BridgeSolver::solve(std::span<const Formula> conjunction, const WidthMap& widths) {
    char path[] = "/tmp/symnet-query-XXXXXX";
    const int fd = mkstemp(path);
    if (fd < 0)
        throw SolverError("cannot create a temporary query file");
    const std::string text = to_smtlib(conjunction, widths);
    const bool written = ::write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size());
    ::close(fd);
    if (!written) {
        ::unlink(path);
        throw SolverError("cannot write the query file");
    }
    const std::string cmd = command_ + " " + path;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        ::unlink(path);
        throw SolverError("cannot start '" + command_ + "'");
    }
    std::string answer;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        answer.append(buf.data(), n);
    ::pclose(pipe);
    ::unlink(path);
    try {
        return parse_smt_answer(answer);
    } catch (const ParseError& e) {
        throw SolverError(std::string("malformed solver answer: ") + e.what());
    }
}

} // namespace symnet
