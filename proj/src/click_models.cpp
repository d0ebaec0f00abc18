#include "symnet/error.hpp"
#include "symnet/models.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace symnet {

namespace {

const std::vector<std::string> kClickKinds = {"IPMirror",   "DecIPTTL", "HostEtherFilter", "IPClassifier",
                                              "IPRewriter", "EtherEncap", "Strip",         "EtherDecap",
                                              "SetIPChecksum", "Paint",   "CheckPaint"};

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return std::string(s.substr(a, b - a));
}

std::uint64_t number_arg(const std::string& id, const std::string& text) {
    const std::string t = trim(text);
    if (auto mac = parse_mac(t))
        return *mac;
    if (auto ip = parse_ipv4(t))
        return *ip;
    std::uint64_t v = 0;
    int base = 10;
    std::size_t skip = 0;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
        base = 16;
        skip = 2;
    }
    const char* first = t.data() + skip;
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, v, base);
    if (first == last || ec != std::errc() || ptr != last)
        throw ModelError(id + ": bad numeric argument \"" + t + "\"");
    return v;
}

void want_args(const std::string& id, const std::string& kind, const std::vector<std::string>& args, std::size_t n) {
    if (args.size() != n)
        throw ModelError(id + ": " + kind + " takes " + std::to_string(n) + " argument(s), got " +
                         std::to_string(args.size()));
}

// tcpdump-like filter primitives: tcp, udp, icmp, [src|dst] host A,
// [src|dst] [tcp|udp] port N, combined with and/or/not and parentheses.
class FilterParser {
public:
    FilterParser(std::string id, std::string_view text) : id_(std::move(id)) {
        std::string cur;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') {
                if (!cur.empty())
                    toks_.push_back(cur);
                cur.clear();
                if (c != ' ' && !std::isspace(static_cast<unsigned char>(c)))
                    toks_.emplace_back(1, c);
            } else {
                cur += c;
            }
        }
        if (!cur.empty())
            toks_.push_back(cur);
    }

    Cond parse() {
        if (toks_.empty())
            error("empty filter");
        Cond c = disjunction();
        if (i_ != toks_.size())
            error("unexpected \"" + toks_[i_] + "\"");
        return c;
    }

private:
    [[noreturn]] void error(const std::string& m) const { throw ModelError(id_ + ": malformed filter: " + m); }

    bool accept(const std::string& t) {
        if (i_ < toks_.size() && toks_[i_] == t) {
            ++i_;
            return true;
        }
        return false;
    }

    const std::string& next() {
        if (i_ >= toks_.size())
            error("unexpected end");
        return toks_[i_++];
    }

    Cond disjunction() {
        std::vector<Cond> items{conjunction()};
        while (accept("or") || accept("||"))
            items.push_back(conjunction());
        return items.size() == 1 ? items[0] : Cond::any(std::move(items));
    }

    Cond conjunction() {
        std::vector<Cond> items{unary()};
        while (accept("and") || accept("&&"))
            items.push_back(unary());
        return items.size() == 1 ? items[0] : Cond::all(std::move(items));
    }

    Cond unary() {
        if (accept("not") || accept("!"))
            return Cond::negation(unary());
        if (accept("(")) {
            Cond c = disjunction();
            if (!accept(")"))
                error("missing )");
            return c;
        }
        return primitive();
    }

    static Cond eq(const char* field, std::uint64_t v) {
        return Cond::cmp(CmpOp::Eq, expand_shorthand(field), Expr::literal(v));
    }

    Cond primitive() {
        std::string dir;
        std::string proto;
        for (;;) {
            if (i_ >= toks_.size())
                break;
            const std::string& t = toks_[i_];
            if ((t == "src" || t == "dst") && dir.empty()) {
                dir = t;
                ++i_;
            } else if ((t == "tcp" || t == "udp" || t == "icmp") && proto.empty()) {
                proto = t;
                ++i_;
            } else {
                break;
            }
        }
        const auto proto_cond = [&]() -> std::optional<Cond> {
            if (proto == "tcp")
                return eq("IPProto", 6);
            if (proto == "udp")
                return eq("IPProto", 17);
            if (proto == "icmp")
                return eq("IPProto", 1);
            return std::nullopt;
        };
        const auto with_proto = [&](Cond c) {
            if (auto p = proto_cond())
                return Cond::all({*p, c});
            return c;
        };
        if (accept("host")) {
            const auto ip = parse_ipv4(next());
            if (!ip)
                error("bad host address");
            if (dir == "src")
                return with_proto(eq("IpSrc", *ip));
            if (dir == "dst")
                return with_proto(eq("IpDst", *ip));
            return with_proto(Cond::any({eq("IpSrc", *ip), eq("IpDst", *ip)}));
        }
        if (accept("port")) {
            std::uint64_t p = 0;
            const std::string& t = next();
            auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), p);
            if (ec != std::errc() || ptr != t.data() + t.size() || p > 0xffff)
                error("bad port \"" + t + "\"");
            if (dir == "src")
                return with_proto(eq("TcpSrc", p));
            if (dir == "dst")
                return with_proto(eq("TcpDst", p));
            return with_proto(Cond::any({eq("TcpSrc", p), eq("TcpDst", p)}));
        }
        if (!dir.empty())
            error("expected host or port after " + dir);
        if (auto p = proto_cond())
            return *p;
        error(i_ < toks_.size() ? "unexpected \"" + toks_[i_] + "\"" : "unexpected end");
    }

    std::string id_;
    std::vector<std::string> toks_;
    std::size_t i_ = 0;
};

Cond compile_filter(const std::string& id, const std::string& filter) {
    const std::string f = trim(filter);
    if (f == "-" || f == "true")
        return Cond::truth(true);
    try {
        return parse_condition(f);
    } catch (const ParseError&) {
    } catch (const PathError&) {
    }
    return FilterParser(id, f).parse();
}

ElementModel sections(const std::string& id, const std::string& kind, const std::string& text, unsigned inputs,
                      unsigned outputs) {
    return make_element(id, kind, parse_sefl(text), inputs, outputs);
}

} // namespace

bool is_supported_click_kind(const std::string& kind) {
    return std::find(kClickKinds.begin(), kClickKinds.end(), kind) != kClickKinds.end();
}

ElementModel build_click_element(const std::string& id, const std::string& kind, const std::vector<std::string>& args,
                                 const ClickOptions& options) {
    if (kind == "IPMirror") {
        return sections(id, kind, R"(
Allocate("tmp-ip", 32, local)
Assign("tmp-ip", IpSrc)
Assign(IpSrc, IpDst)
Assign(IpDst, "tmp-ip")
Deallocate("tmp-ip")
Allocate("tmp-port", 16, local)
Assign("tmp-port", TcpSrc)
Assign(TcpSrc, TcpDst)
Assign(TcpDst, "tmp-port")
Deallocate("tmp-port")
Forward(0)
)",
                        1, 1);
    }
    if (kind == "DecIPTTL") {
        return sections(id, kind, R"(If(TTL >= 1, InstructionBlock(Assign(TTL, TTL - 1), Forward(0)), Fail("TTL expired")))",
                        1, 1);
    }
    if (kind == "HostEtherFilter") {
        want_args(id, kind, args, 1);
        const auto mac = parse_mac(trim(args[0]));
        if (!mac)
            throw ModelError(id + ": bad MAC \"" + args[0] + "\"");
        return sections(id, kind, "Constrain(EtherDst == " + std::to_string(*mac) + ")\nForward(0)\n", 1, 1);
    }
    if (kind == "IPClassifier") {
        if (args.empty())
            throw ModelError(id + ": IPClassifier needs at least one filter");
        ElementModel m;
        m.id = id;
        m.kind = kind;
        m.inputs = 1;
        m.outputs = static_cast<unsigned>(args.size());
        std::vector<Cond> earlier;
        std::vector<unsigned> ports;
        for (unsigned i = 0; i < args.size(); ++i) {
            const Cond c = compile_filter(id, args[i]);
            std::vector<Cond> parts{c};
            for (const auto& e : earlier)
                parts.push_back(Cond::negation(e));
            m.output_code.emplace(i, Instr::constrain(parts.size() == 1 ? parts[0] : Cond::all(std::move(parts))));
            earlier.push_back(c);
            ports.push_back(i);
        }
        m.any_input = Instr::fork(ports);
        m.validate();
        return m;
    }
    if (kind == "IPRewriter") {
        std::string text = "InputPort(0):\n";
        if (options.rewriter_guard)
            text += "Constrain(IpSrc != IpDst)\n";
        text += R"(Allocate("fw-src", 32, local)
Assign("fw-src", IpSrc)
Allocate("fw-dst", 32, local)
Assign("fw-dst", IpDst)
Allocate("fw-sport", 16, local)
Assign("fw-sport", TcpSrc)
Allocate("fw-dport", 16, local)
Assign("fw-dport", TcpDst)
Forward(0)

InputPort(1):
If(IpSrc == "fw-src" & IpDst == "fw-dst" & TcpSrc == "fw-sport" & TcpDst == "fw-dport",
   Forward(0),
   InstructionBlock(
      Constrain(IpSrc == "fw-dst" & IpDst == "fw-src" & TcpSrc == "fw-dport" & TcpDst == "fw-sport"),
      Forward(1)))
)";
        return sections(id, kind, text, 2, 2);
    }
    if (kind == "EtherEncap") {
        want_args(id, kind, args, 3);
        const std::uint64_t proto = number_arg(id, args[0]);
        const std::uint64_t src = number_arg(id, args[1]);
        const std::uint64_t dst = number_arg(id, args[2]);
        return sections(id, kind,
                        "CreateTag(\"L2\", Tag(\"L3\") - 112)\nAllocate(EtherDst)\nAssign(EtherDst, " +
                            std::to_string(dst) + ")\nAllocate(EtherSrc)\nAssign(EtherSrc, " + std::to_string(src) +
                            ")\nAllocate(EtherProto)\nAssign(EtherProto, " + std::to_string(proto) +
                            ")\nForward(0)\n",
                        1, 1);
    }
    if (kind == "Strip" || kind == "EtherDecap") {
        if (kind == "Strip") {
            want_args(id, kind, args, 1);
            if (number_arg(id, args[0]) != 14)
                throw ModelError(id + ": only Strip(14) is supported");
        }
        return sections(id, kind,
                        "Deallocate(EtherDst)\nDeallocate(EtherSrc)\nDeallocate(EtherProto)\nDestroyTag(\"L2\")\n"
                        "Forward(0)\n",
                        1, 1);
    }
    if (kind == "SetIPChecksum")
        return sections(id, kind, "NoOp\nForward(0)\n", 1, 1);
    if (kind == "Paint") {
        want_args(id, kind, args, 1);
        return sections(id, kind,
                        "Allocate(\"PAINT\", 8)\nAssign(\"PAINT\", " + std::to_string(number_arg(id, args[0])) +
                            ")\nForward(0)\n",
                        1, 1);
    }
    if (kind == "CheckPaint") {
        want_args(id, kind, args, 1);
        return sections(id, kind,
                        "If(\"PAINT\" == " + std::to_string(number_arg(id, args[0])) +
                            ", Forward(0), Forward(1))\n",
                        1, 2);
    }
    throw ModelError("UnsupportedElement(\"" + kind + "\")");
}

} // namespace symnet
