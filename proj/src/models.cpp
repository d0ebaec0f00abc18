#include "symnet/models.hpp"

#include "symnet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace symnet {

namespace {

std::string num(std::uint64_t v) { return std::to_string(v); }

Instr instructions(const std::string& text) { return parse_instructions(text); }

ElementModel element(const std::string& id, const std::string& kind, const std::string& text, unsigned inputs = 0,
                     unsigned outputs = 0) {
    return make_element(id, kind, parse_sefl(text), inputs, outputs);
}

const char* const kEthernet = R"(
CreateTag("L2", Tag("Start"))
Allocate(EtherDst)
Allocate(EtherSrc)
Allocate(EtherProto)
)";

const char* const kIpv4 = R"(
Allocate(IpVersion)
Assign(IpVersion, 4)
Allocate(IpHeaderLength)
Assign(IpHeaderLength, 5)
Allocate(IpTos)
Allocate(IpLength)
Allocate(IpID)
Allocate(IpFlags)
Allocate(IpFragmentOffset)
Allocate(TTL)
Allocate(IPProto)
Allocate(IpChecksum)
Allocate(IpSrc)
Allocate(IpDst)
)";

const char* const kTcp = R"(
Allocate(TcpSrc)
Allocate(TcpDst)
Allocate(TcpSeq)
Allocate(TcpAck)
Allocate(TcpDataOffset)
Allocate(TcpReserved)
Allocate(TcpFlags)
Allocate(TcpWindow)
Allocate(TcpChecksum)
Allocate(TcpUrgent)
Allocate(TcpPayload)
CreateTag("End", Tag("L4") + 224)
)";

const char* const kUdp = R"(
Allocate(UdpSrc)
Allocate(UdpDst)
Allocate(UdpLength)
Allocate(UdpChecksum)
CreateTag("End", Tag("L4") + 64)
)";

const char* const kVlan = "Allocate(\"VLAN\", 12)\n";

const char* const kIpFieldsOuter[] = {"IpVersion",        "IpHeaderLength", "IpTos",   "IpLength",
                                      "IpID",             "IpFlags",        "IpFragmentOffset",
                                      "TTL",              "IPProto",        "IpChecksum",
                                      "IpSrc",            "IpDst"};

} // namespace

// ---- packet templates ----

Instr tcp_packet() {
    return instructions(std::string(kVlan) + kEthernet + "Assign(EtherProto, 0x0800)\n" +
                        "CreateTag(\"L3\", Tag(\"L2\") + 112)\n" + kIpv4 + "Assign(IPProto, 6)\n" +
                        "CreateTag(\"L4\", Tag(\"L3\") + 160)\n" + kTcp);
}

Instr udp_packet() {
    return instructions(std::string(kVlan) + kEthernet + "Assign(EtherProto, 0x0800)\n" +
                        "CreateTag(\"L3\", Tag(\"L2\") + 112)\n" + kIpv4 + "Assign(IPProto, 17)\n" +
                        "CreateTag(\"L4\", Tag(\"L3\") + 160)\n" + kUdp);
}

Instr ip_packet() {
    return instructions(std::string("CreateTag(\"L3\", Tag(\"Start\"))\n") + kIpv4 + "Assign(IPProto, 6)\n" +
                        "CreateTag(\"L4\", Tag(\"L3\") + 160)\n" + kTcp);
}

Instr ether_packet() {
    return instructions(std::string(kVlan) + kEthernet + "CreateTag(\"End\", Tag(\"L2\") + 112)\n");
}

Instr packet_template(std::string_view name) {
    if (name == "tcp")
        return tcp_packet();
    if (name == "udp" || name == "udp-less-tcp-fields")
        return udp_packet();
    if (name == "ip")
        return ip_packet();
    if (name == "ether")
        return ether_packet();
    throw ModelError("unknown packet template \"" + std::string(name) + "\"");
}

Instr tcp_options_allocation(const std::vector<unsigned>& kinds, OptionWidths widths) {
    std::vector<Instr> out;
    for (unsigned k : kinds) {
        if (k < 2 || k > 255)
            throw ModelError("option kind " + num(k) + " outside 2..255");
        out.push_back(Instr::allocate(Target::meta("OPT" + num(k)), widths.present));
        out.push_back(Instr::allocate(Target::meta("SIZE" + num(k)), widths.size));
        out.push_back(Instr::allocate(Target::meta("VAL" + num(k)), widths.value));
    }
    return Instr::block(std::move(out));
}

// ---- switches ----

namespace {

Cond mac_match(const MacEntry& e, bool vlan_aware) {
    Cond c = Cond::cmp(CmpOp::Eq, expand_shorthand("EtherDst"), Expr::literal(e.mac));
    if (!vlan_aware)
        return c;
    return Cond::all({c, Cond::cmp(CmpOp::Eq, Expr::meta(kVlanKey), Expr::literal(e.vlan))});
}

} // namespace

ElementModel build_switch(const std::string& id, const std::vector<MacEntry>& entries, SwitchMode mode) {
    if (entries.empty())
        throw ModelError(id + ": empty MAC table");
    std::set<std::uint64_t> vlans;
    unsigned outputs = 0;
    for (const auto& e : entries) {
        vlans.insert(e.vlan);
        outputs = std::max(outputs, e.port + 1);
    }
    const bool vlan_aware = vlans.size() > 1;

    // (vlan, mac) -> port, first entry wins
    std::map<std::pair<std::uint64_t, std::uint64_t>, unsigned> seen;
    std::vector<MacEntry> table;
    for (const auto& e : entries) {
        auto [it, fresh] = seen.emplace(std::make_pair(vlan_aware ? e.vlan : 0, e.mac), e.port);
        if (!fresh) {
            if (mode == SwitchMode::Egress && it->second != e.port)
                throw ModelError(id + ": MAC " + format_mac(e.mac) + " maps to ports " + num(it->second) +
                                 " and " + num(e.port));
            continue;
        }
        table.push_back(e);
    }

    std::map<unsigned, std::vector<Cond>> per_port;
    for (const auto& e : table)
        per_port[e.port].push_back(mac_match(e, vlan_aware));

    ElementModel m;
    m.id = id;
    m.kind = "switch";
    m.inputs = 1;
    m.outputs = outputs;
    switch (mode) {
    case SwitchMode::Basic: {
        std::vector<Instr> body;
        body.reserve(table.size() + 1);
        for (const auto& e : table)
            body.push_back(Instr::if_(mac_match(e, vlan_aware), Instr::forward(e.port), Instr::noop()));
        body.push_back(Instr::fail("Mac unknown"));
        m.any_input = Instr::block(std::move(body));
        break;
    }
    case SwitchMode::Ingress: {
        Instr chain = Instr::fail("Mac unknown");
        for (auto it = per_port.rbegin(); it != per_port.rend(); ++it)
            chain = Instr::if_(Cond::any(it->second), Instr::forward(it->first), chain);
        m.any_input = chain;
        break;
    }
    case SwitchMode::Egress: {
        std::vector<unsigned> ports;
        for (auto& [p, conds] : per_port) {
            ports.push_back(p);
            m.output_code.emplace(p, Instr::constrain(Cond::any(conds)));
        }
        m.any_input = Instr::fork(ports);
        break;
    }
    }
    m.validate();
    return m;
}

// ---- router ----

namespace {

Expr field_expr(const RouterOptions& o) {
    if (ShorthandTable::builtin().find(o.field))
        return expand_shorthand(o.field);
    return Expr::meta(o.field);
}

std::uint64_t prefix_mask(unsigned length, unsigned width) {
    if (length == 0)
        return 0;
    return width_mask(width) & ~width_mask(width - length);
}

bool contains(const FibEntry& outer, const FibEntry& inner, unsigned width) {
    if (outer.length > inner.length)
        return false;
    const std::uint64_t m = prefix_mask(outer.length, width);
    return (inner.base & m) == (outer.base & m);
}

Cond prefix_cond(const FibEntry& e, const RouterOptions& o) {
    if (e.length == 0)
        return Cond::truth(true);
    const Expr f = field_expr(o);
    if (e.length == o.width)
        return Cond::cmp(CmpOp::Eq, f, Expr::literal(e.base));
    const std::uint64_t hi = e.base | width_mask(o.width - e.length);
    return Cond::all({Cond::cmp(CmpOp::Ge, f, Expr::literal(e.base)), Cond::cmp(CmpOp::Le, f, Expr::literal(hi))});
}

struct PrefixTree {
    std::vector<FibEntry> entries;
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::size_t> roots;
};

PrefixTree build_tree(const std::vector<FibEntry>& fib, const RouterOptions& o) {
    if (o.width == 0 || o.width > kMaxWidth)
        throw ModelError("router field width " + num(o.width));
    PrefixTree t;
    std::map<std::pair<std::uint64_t, unsigned>, unsigned> seen;
    for (const auto& e : fib) {
        if (e.length > o.width)
            throw ModelError("prefix length " + num(e.length) + " exceeds " + num(o.width));
        if ((e.base & ~prefix_mask(e.length, o.width)) != 0)
            throw ModelError("prefix base " + num(e.base) + "/" + num(e.length) + " has host bits set");
        auto [it, fresh] = seen.emplace(std::make_pair(e.base, e.length), e.port);
        if (!fresh) {
            if (it->second != e.port)
                throw ModelError("prefix " + num(e.base) + "/" + num(e.length) + " maps to interfaces " +
                                 num(it->second) + " and " + num(e.port));
            continue;
        }
        t.entries.push_back(e);
    }
    std::vector<std::size_t> order(t.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = t.entries[a];
        const auto& y = t.entries[b];
        return x.base != y.base ? x.base < y.base : x.length < y.length;
    });
    t.children.resize(t.entries.size());
    std::vector<std::size_t> stack;
    for (std::size_t i : order) {
        while (!stack.empty() && !contains(t.entries[stack.back()], t.entries[i], o.width))
            stack.pop_back();
        if (stack.empty())
            t.roots.push_back(i);
        else
            t.children[stack.back()].push_back(i);
        stack.push_back(i);
    }
    return t;
}

Cond guard(const PrefixTree& t, std::size_t i, const RouterOptions& o) {
    std::vector<Cond> parts{prefix_cond(t.entries[i], o)};
    for (std::size_t c : t.children[i])
        parts.push_back(Cond::negation(prefix_cond(t.entries[c], o)));
    return parts.size() == 1 ? parts[0] : Cond::all(std::move(parts));
}

} // namespace

Cond lpm_guard(const std::vector<FibEntry>& fib, std::size_t index, const RouterOptions& options) {
    if (index >= fib.size())
        throw ModelError("FIB index out of range");
    const PrefixTree t = build_tree(fib, options);
    const auto& want = fib[index];
    for (std::size_t i = 0; i < t.entries.size(); ++i)
        if (t.entries[i].base == want.base && t.entries[i].length == want.length)
            return guard(t, i, options);
    throw ModelError("FIB entry not found");
}

ElementModel build_router(const std::string& id, const std::vector<FibEntry>& fib, RouterOptions options) {
    if (fib.empty())
        throw ModelError(id + ": empty FIB");
    const PrefixTree t = build_tree(fib, options);
    std::map<unsigned, std::vector<Cond>> per_port;
    unsigned outputs = 0;
    bool default_route = false;
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
        per_port[t.entries[i].port].push_back(guard(t, i, options));
        outputs = std::max(outputs, t.entries[i].port + 1);
        default_route = default_route || t.entries[i].length == 0;
    }
    ElementModel m;
    m.id = id;
    m.kind = "router";
    m.inputs = 1;
    m.outputs = outputs;
    std::vector<unsigned> ports;
    for (auto& [p, guards] : per_port) {
        ports.push_back(p);
        m.output_code.emplace(p, Instr::constrain(guards.size() == 1 ? guards[0] : Cond::any(guards)));
    }
    if (default_route) {
        m.any_input = Instr::fork(ports);
    } else {
        std::vector<Cond> matched;
        for (std::size_t r : t.roots)
            matched.push_back(prefix_cond(t.entries[r], options));
        m.any_input = Instr::if_(matched.size() == 1 ? matched[0] : Cond::any(std::move(matched)),
                                 Instr::fork(ports), Instr::fail("no route"));
    }
    m.validate();
    return m;
}

// ---- NAT ----

ElementModel build_nat(const std::string& id, std::uint64_t external_ip, std::uint64_t port_lo,
                       std::uint64_t port_hi) {
    if (port_lo > port_hi)
        throw ModelError(id + ": empty NAT port range");
    const std::string text = R"(
InputPort(0):
Constrain(IPProto, ==6)
Allocate("orig-ip", 32, local)
Assign("orig-ip", IpSrc)
Allocate("orig-port", 16, local)
Assign("orig-port", TcpSrc)
Assign(IpSrc, )" + num(external_ip) + R"()
Assign(TcpSrc, SymbolicValue())
Constrain(TcpSrc >= )" + num(port_lo) + " & TcpSrc <= " + num(port_hi) + R"()
Allocate("new-ip", 32, local)
Assign("new-ip", IpSrc)
Allocate("new-port", 16, local)
Assign("new-port", TcpSrc)
Forward(OutputPort(0))

InputPort(1):
Constrain(IPProto, ==6)
Constrain(IpDst == "new-ip")
Constrain(TcpDst == "new-port")
Assign(IpDst, "orig-ip")
Assign(TcpDst, "orig-port")
Forward(OutputPort(1))
)";
    return element(id, "nat", text, 2, 2);
}

// ---- tunnels ----

ElementModel build_encap(const std::string& id, std::uint64_t outer_src, std::uint64_t outer_dst) {
    std::string text = R"(
CreateTag("L4", Tag("L3"))
CreateTag("L3", Tag("L4") - 160)
DestroyTag("L4")
Allocate("IPinIP", 8)
)";
    for (const char* f : kIpFieldsOuter)
        text += std::string("Allocate(") + f + ")\n";
    text += "Assign(IpVersion, 4)\nAssign(IpHeaderLength, 5)\nAssign(TTL, 64)\nAssign(IPProto, 4)\n";
    text += "Assign(IpSrc, " + num(outer_src) + ")\n";
    text += "Assign(IpDst, " + num(outer_dst) + ")\n";
    text += "Forward(0)\n";
    return element(id, "encap", text, 1, 1);
}

ElementModel build_decap(const std::string& id) {
    std::string text = "Deallocate(\"IPinIP\")\nConstrain(IPProto, ==4)\n";
    for (const char* f : kIpFieldsOuter)
        text += std::string("Deallocate(") + f + ")\n";
    text += R"(CreateTag("L3", Tag("L3") + 160)
If(IPProto == 4, NoOp, CreateTag("L4", Tag("L3") + 160))
Forward(0)
)";
    return element(id, "decap", text, 1, 1);
}

std::pair<ElementModel, ElementModel> build_tunnel_endpoints(const std::string& encap_id, const std::string& decap_id,
                                                             std::uint64_t outer_src, std::uint64_t outer_dst) {
    return {build_encap(encap_id, outer_src, outer_dst), build_decap(decap_id)};
}

// ---- encryption ----

ElementModel build_encrypt(const std::string& id, std::uint64_t key) {
    return element(id, "encrypt",
                   "Allocate(\"Key\", 64)\nAssign(\"Key\", " + num(key) + ")\nAllocate(TcpPayload)\nForward(0)\n", 1,
                   1);
}

ElementModel build_decrypt(const std::string& id, std::uint64_t key) {
    return element(id, "decrypt",
                   "Constrain(\"Key\" == " + num(key) +
                       ")\nDeallocate(TcpPayload)\nDeallocate(\"Key\")\nForward(0)\n",
                   1, 1);
}

std::pair<ElementModel, ElementModel> build_crypto(const std::string& encrypt_id, const std::string& decrypt_id,
                                                   std::uint64_t key) {
    return {build_encrypt(encrypt_id, key), build_decrypt(decrypt_id, key)};
}

// ---- TCP options ----

OptionsPolicy OptionsPolicy::asa_default(unsigned sack_kind) {
    OptionsPolicy p;
    p.actions[30] = {OptionAction::Kind::Strip, 0, 0};
    p.actions[2] = {OptionAction::Kind::Force, 1380, 4};
    p.strip_if_dst.push_back({sack_kind, 80});
    return p;
}

ElementModel build_tcp_options(const std::string& id, const OptionsPolicy& policy) {
    const auto check = [](unsigned k) {
        if (k < 2 || k > 255)
            throw ModelError("option kind " + num(k) + " outside 2..255");
    };
    std::string text;
    if (policy.invalid_length_guard)
        text += "If(TcpDataOffset < 5, For(k in \"OPT[0-9]+\", If(k == 1, Assign(k, SymbolicValue()), NoOp)), "
                "NoOp)\n";
    for (auto it = policy.actions.rbegin(); it != policy.actions.rend(); ++it) {
        check(it->first);
        if (it->second.kind == OptionAction::Kind::Strip)
            text += "Assign(\"OPT" + num(it->first) + "\", ConstantValue(0))\n";
    }
    for (const auto& [k, port] : policy.strip_if_dst) {
        check(k);
        text += "If(Constrain(TcpDst == " + num(port) + "), Assign(\"OPT" + num(k) + "\", 0), NoOp)\n";
    }
    for (const auto& [k, a] : policy.actions) {
        if (a.kind != OptionAction::Kind::Force)
            continue;
        const std::string n = num(k);
        text += "Assign(\"OPT" + n + "\", 1)\n";
        if (a.size)
            text += "Assign(\"SIZE" + n + "\", " + num(a.size) + ")\n";
        text += "If(Constrain(\"VAL" + n + "\" > " + num(a.cap) + "), Assign(\"VAL" + n + "\", " + num(a.cap) +
                "), NoOp)\n";
    }
    text += "Forward(0)\n";
    return element(id, "tcp-options", text, 1, 1);
}

// ---- addresses ----

std::optional<std::uint64_t> parse_mac(std::string_view text) {
    if (text.size() != 17)
        return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 17; ++i) {
        const char c = text[i];
        if (i % 3 == 2) {
            if (c != ':' && c != '-')
                return std::nullopt;
            continue;
        }
        if (!std::isxdigit(static_cast<unsigned char>(c)))
            return std::nullopt;
        const int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                                                                   : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
        v = v * 16 + static_cast<std::uint64_t>(d);
    }
    return v;
}

std::string format_mac(std::uint64_t mac) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (int i = 5; i >= 0; --i) {
        const auto b = (mac >> (8 * i)) & 0xff;
        out += digits[b >> 4];
        out += digits[b & 0xf];
        if (i)
            out += ':';
    }
    return out;
}

std::optional<std::uint64_t> parse_ipv4(std::string_view text) {
    std::uint64_t out = 0;
    std::size_t pos = 0;
    for (int part = 0; part < 4; ++part) {
        std::size_t j = pos;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
            ++j;
        if (j == pos || j - pos > 3)
            return std::nullopt;
        unsigned v = 0;
        std::from_chars(text.data() + pos, text.data() + j, v);
        if (v > 255)
            return std::nullopt;
        out = (out << 8) | v;
        pos = j;
        if (part < 3) {
            if (pos >= text.size() || text[pos] != '.')
                return std::nullopt;
            ++pos;
        }
    }
    if (pos != text.size())
        return std::nullopt;
    return out;
}

std::string format_ipv4(std::uint64_t ip) {
    return num((ip >> 24) & 0xff) + "." + num((ip >> 16) & 0xff) + "." + num((ip >> 8) & 0xff) + "." + num(ip & 0xff);
}

} // namespace symnet
