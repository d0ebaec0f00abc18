#include "symnet/engine.hpp"
#include "symnet/error.hpp"
#include "symnet/ingest.hpp"
#include "symnet/models.hpp"
#include "symnet/verify.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace symnet;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- shared helpers ----

struct WitnessTally {
    std::uint64_t paths = 0;
    std::uint64_t bad = 0;
    std::string first_problem;
};

WitnessTally g_witness;

void witness_all(const ExecutionResult& r, const std::string& where) {
    InternalSolver solver;
    for (const auto& t : r.paths) {
        if (t.state.status == PathStatus::Dropped)
            continue;
        ++g_witness.paths;
        std::string problem;
        try {
            const auto w = synth_test_packet(t, solver);
            if (!w) {
                problem = "no witness";
            } else {
                for (const auto& f : t.state.formulas())
                    if (!f.evaluate(w->model)) {
                        problem = "witness violates " + f.to_string();
                        break;
                    }
            }
        } catch (const std::exception& e) {
            problem = e.what();
        }
        if (!problem.empty()) {
            if (g_witness.bad++ == 0)
                g_witness.first_problem = where + " path " + std::to_string(t.state.id) + ": " + problem;
        }
    }
}

ExecutionResult run(const NetworkGraph& net, const PortRef& entry, const Instr& init, EngineOptions o = {}) {
    InternalSolver solver;
    Engine engine(net, solver, o);
    return engine.inject(entry, init);
}

NetworkGraph single(ElementModel e) {
    NetworkGraph g;
    g.add(std::move(e));
    return g;
}

Instr with(const Instr& base, const std::string& extra) { return Instr::block({base, parse_instructions(extra)}); }

std::set<std::string> delivered_ports(const ExecutionResult& r) {
    std::set<std::string> out;
    for (const auto& t : r.paths)
        if (t.state.status == PathStatus::Delivered)
            out.insert(t.state.port_trace().back());
    return out;
}

std::size_t feasible(const ExecutionResult& r) { return r.paths.size() - r.count(PathStatus::Dropped); }

ValueId entry_id(const PathState& s, const std::string& field) {
    for (const auto& sv : s.visits().front().stacks)
        if (sv.name == field)
            return sv.frames.back();
    throw std::runtime_error("no entry field " + field);
}

const StackView* view_at(const PathState& s, const std::string& port, const std::string& field) {
    for (const auto& v : s.visits())
        if (v.port == port)
            for (const auto& sv : v.stacks)
                if (sv.name == field)
                    return &sv;
    return nullptr;
}

const Frame& current(const PathState& s, const std::string& field) {
    const auto var = s.resolve(field, ShorthandTable::builtin());
    if (!var || !s.live(*var))
        throw std::runtime_error("no live field " + field);
    return *s.live(*var);
}

const TerminatedPath& only_delivered(const ExecutionResult& r) {
    for (const auto& t : r.paths)
        if (t.state.status == PathStatus::Delivered)
            return t;
    throw std::runtime_error("no delivered path");
}

std::optional<SymbolId> entry_symbol(const PathState& s, const std::string& name) {
    for (const auto& [sym, n] : entry_symbol_names(s))
        if (n == name)
            return sym;
    return std::nullopt;
}

bool holds(const PathState& s, const Assignment& a) {
    for (const auto& f : s.formulas())
        if (!f.evaluate(a))
            return false;
    return true;
}

std::vector<MacEntry> mac_table(std::mt19937_64& rng, std::size_t n, unsigned ports) {
    std::set<std::uint64_t> used;
    std::vector<MacEntry> out;
    out.reserve(n);
    while (out.size() < n) {
        const std::uint64_t mac = (rng() & 0xfcffffffffffull) | 0x020000000000ull;
        if (!used.insert(mac).second)
            continue;
        out.push_back({1, mac, static_cast<unsigned>(rng() % ports)});
    }
    return out;
}

// ---- 1: egress branching ----

Outcome egress_branching() {
    Outcome o;
    std::mt19937_64 rng(101);
    const auto table = mac_table(rng, 10000, 20);
    std::set<unsigned> ports;
    for (const auto& e : table)
        ports.insert(e.port);
    auto t0 = Clock::now();
    const auto r = run(single(build_switch("S", table, SwitchMode::Egress)), {"S", 0}, tcp_packet());
    const double small = since(t0);
    o.expect(feasible(r) == 20 && r.count(PathStatus::Delivered) == 20,
             "10k table gave " + std::to_string(feasible(r)) + " feasible paths");
    o.expect(delivered_ports(r).size() == ports.size() && ports.size() == 20, "not every port reached once");
    o.expect(small < 30.0, "10k table took " + fmt("%.1f s", small));
    witness_all(r, "egress-10k");

    const auto big_table = mac_table(rng, 100000, 20);
    t0 = Clock::now();
    const auto big = run(single(build_switch("S", big_table, SwitchMode::Egress)), {"S", 0}, tcp_packet());
    const double large = since(t0);
    o.expect(feasible(big) == 20, "100k table gave " + std::to_string(feasible(big)) + " feasible paths");
    o.expect(large < 300.0, "100k table took " + fmt("%.1f s", large));
    witness_all(big, "egress-100k");

    std::string text;
    for (const auto& e : mac_table(rng, 480000, 20))
        text += std::to_string(e.vlan) + "," + format_mac(e.mac) + "," + std::to_string(e.port) + "\n";
    t0 = Clock::now();
    const auto parsed = parse_mac_table(text);
    const auto huge = run(single(build_switch("S", parsed, SwitchMode::Egress)), {"S", 0}, tcp_packet());
    const double file = since(t0);
    o.expect(parsed.size() == 480000 && feasible(huge) == 20, "480k file did not give 20 paths");
    witness_all(huge, "egress-480k");
    if (o.pass)
        o.detail = "20 paths; 10k in " + fmt("%.2f s", small) + ", 100k in " + fmt("%.2f s", large) +
                   ", 480k parsed and run in " + fmt("%.2f s", file);
    return o;
}

// ---- 2: switch variants ----

Outcome switch_variants() {
    Outcome o;
    std::mt19937_64 rng(202);
    std::size_t probes = 0;
    for (int round = 0; round < 50 && o.pass; ++round) {
        const std::size_t n = 1 + rng() % 200;
        const unsigned vlans = 1 + static_cast<unsigned>(rng() % 3);
        std::vector<MacEntry> table;
        std::set<std::pair<std::uint64_t, std::uint64_t>> keys;
        std::set<std::uint64_t> macs;
        while (table.size() < n) {
            const MacEntry e{1 + rng() % vlans, 0x020000000000ull | (rng() & 0xffffff), static_cast<unsigned>(rng() % 8)};
            if (!keys.insert({e.vlan, e.mac}).second)
                continue;
            macs.insert(e.mac);
            table.push_back(e);
        }
        std::vector<ElementModel> models;
        for (SwitchMode m : {SwitchMode::Basic, SwitchMode::Ingress, SwitchMode::Egress})
            models.push_back(build_switch("S", table, m));
        std::vector<std::pair<MacEntry, bool>> cases;
        for (const auto& e : table)
            cases.push_back({e, true});
        while (cases.size() < table.size() + 100) {
            const std::uint64_t mac = 0x020000000000ull | (rng() & 0xffffff);
            if (!macs.count(mac))
                cases.push_back({MacEntry{1 + rng() % vlans, mac, 0}, false});
        }
        for (const auto& [e, known] : cases) {
            ++probes;
            const Instr init = with(tcp_packet(), "Assign(EtherDst, " + std::to_string(e.mac) + ")\nAssign(\"VLAN\", " +
                                                      std::to_string(e.vlan) + ")");
            std::vector<std::set<std::string>> decisions;
            for (std::size_t m = 0; m < models.size(); ++m) {
                const auto r = run(single(models[m]), {"S", 0}, init);
                witness_all(r, "switch-variants");
                decisions.push_back(delivered_ports(r));
                if (!known) {
                    if (m < 2)
                        o.expect(r.count(PathStatus::Failed) == r.paths.size() && !r.paths.empty(),
                                 "unknown MAC not failed by basic/ingress");
                    else
                        o.expect(feasible(r) == 0, "unknown MAC has a feasible egress path");
                }
            }
            const std::set<std::string> want =
                known ? std::set<std::string>{"S.out[" + std::to_string(e.port) + "]"} : std::set<std::string>{};
            for (const auto& d : decisions)
                o.expect(d == want, "decision mismatch for " + format_mac(e.mac) + " in table " + std::to_string(round));
        }
    }
    if (o.pass)
        o.detail = std::to_string(probes) + " frames agree across 50 tables";
    return o;
}

// ---- 3: router LPM ----

std::optional<unsigned> lpm(const std::vector<FibEntry>& fib, std::uint64_t addr, unsigned width) {
    std::optional<unsigned> best;
    int best_len = -1;
    for (const auto& e : fib) {
        const std::uint64_t mask = e.length == 0 ? 0 : (width_mask(width) << (width - e.length)) & width_mask(width);
        if ((addr & mask) == e.base && static_cast<int>(e.length) > best_len) {
            best_len = static_cast<int>(e.length);
            best = e.port;
        }
    }
    return best;
}

Outcome router_lpm() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto ip = [](const char* s) { return *parse_ipv4(s); };
    const std::vector<FibEntry> table = {
        {ip("192.168.0.1"), 32, 0}, {ip("10.0.0.0"), 8, 0}, {ip("192.168.0.0"), 24, 1}, {ip("10.10.0.1"), 32, 1}};
    const auto router = single(build_router("R", table));
    for (const auto& [addr, port] : std::vector<std::pair<const char*, const char*>>{{"10.10.0.1", "R.out[1]"},
                                                                                     {"192.168.0.1", "R.out[0]"}}) {
        const auto r = run(router, {"R", 0}, with(tcp_packet(), std::string("Assign(IpDst, ") + addr + ")"));
        witness_all(r, "router-table");
        o.expect(delivered_ports(r) == std::set<std::string>{port}, std::string(addr) + " not routed to " + port);
    }

    std::mt19937_64 rng(303);
    const RouterOptions opts{"dst", 8};
    const Instr init = parse_instructions("Allocate(\"dst\", 8)\nAssign(\"dst\", SymbolicValue())");
    for (int round = 0; round < 100 && o.pass; ++round) {
        const std::size_t n = 1 + rng() % 64;
        std::vector<FibEntry> fib;
        std::set<std::pair<std::uint64_t, unsigned>> used;
        while (fib.size() < n) {
            const unsigned len = static_cast<unsigned>(rng() % 9);
            const std::uint64_t mask = len == 0 ? 0 : (0xffull << (8 - len)) & 0xff;
            const FibEntry e{(rng() & 0xff) & mask, len, static_cast<unsigned>(rng() % 4)};
            if (used.insert({e.base, e.length}).second)
                fib.push_back(e);
        }
        const auto net = single(build_router("R", fib, opts));
        const auto sym = run(net, {"R", 0}, init);
        witness_all(sym, "router-8bit");
        for (std::uint64_t addr = 0; addr < 256; ++addr) {
            const auto want = lpm(fib, addr, 8);
            const std::set<std::string> expected =
                want ? std::set<std::string>{"R.out[" + std::to_string(*want) + "]"} : std::set<std::string>{};
            const auto r = run(net, {"R", 0}, with(init, "Assign(\"dst\", " + std::to_string(addr) + ")"));
            witness_all(r, "router-8bit-concrete");
            o.expect(delivered_ports(r) == expected,
                     "concrete address " + std::to_string(addr) + " misrouted in FIB " + std::to_string(round));
            std::set<std::string> symbolic;
            for (const auto& t : sym.paths) {
                if (t.state.status != PathStatus::Delivered)
                    continue;
                const auto s = entry_symbol(t.state, "dst");
                if (!s) {
                    o.expect(false, "no entry symbol for dst");
                    continue;
                }
                if (holds(t.state, {{*s, addr}}))
                    symbolic.insert(t.state.port_trace().back());
            }
            o.expect(symbolic == expected,
                     "symbolic region of " + std::to_string(addr) + " wrong in FIB " + std::to_string(round));
        }
    }
    const double s = since(t0);
    o.expect(s < 60.0, "took " + fmt("%.1f s", s));
    if (o.pass)
        o.detail = "table and 100 random FIBs x 256 addresses in " + fmt("%.2f s", s);
    return o;
}

// ---- 4: router branching ----

Outcome router_branching() {
    Outcome o;
    std::mt19937_64 rng(404);
    std::vector<FibEntry> fib;
    std::set<std::pair<std::uint64_t, unsigned>> used;
    std::set<unsigned> interfaces;
    while (fib.size() < 1600) {
        const unsigned len = 8 + static_cast<unsigned>(rng() % 17);
        const std::uint64_t mask = (0xffffffffull << (32 - len)) & 0xffffffffull;
        const std::uint64_t base = (rng() & 0xffffffffull) & mask;
        if (base >> 24 == 0 || !used.insert({base, len}).second)
            continue;
        const unsigned port = static_cast<unsigned>(rng() % 20);
        interfaces.insert(port);
        fib.push_back({base, len, port});
    }
    const auto t0 = Clock::now();
    const auto r = run(single(build_router("R", fib)), {"R", 0}, tcp_packet());
    const double s = since(t0);
    witness_all(r, "router-1600");
    o.expect(r.count(PathStatus::Delivered) == interfaces.size(),
             std::to_string(r.count(PathStatus::Delivered)) + " delivered paths for " +
                 std::to_string(interfaces.size()) + " interfaces");
    o.expect(r.count(PathStatus::Failed) == 1, std::to_string(r.count(PathStatus::Failed)) + " fail regions");
    o.expect(feasible(r) == interfaces.size() + 1, "extra feasible paths");
    InternalSolver solver;
    for (const auto& t : r.paths) {
        if (t.state.status != PathStatus::Delivered)
            continue;
        const auto w = synth_test_packet(t, solver);
        const auto want = w ? lpm(fib, w->fields.at("IpDst"), 32) : std::nullopt;
        o.expect(want && t.state.port_trace().back() == "R.out[" + std::to_string(*want) + "]",
                 "witness of " + t.state.port_trace().back() + " routes elsewhere");
    }
    o.expect(s < 30.0, "took " + fmt("%.1f s", s));
    if (o.pass)
        o.detail = std::to_string(interfaces.size()) + " interfaces + 1 fail region in " + fmt("%.2f s", s);
    return o;
}

// ---- 5: tunnel invariance ----

NetworkGraph tunnel(const std::optional<std::string>& probe) {
    NetworkGraph net;
    net.add(make_element("A", "sefl", parse_sefl("Forward(0)")));
    net.add(build_encap("E1", 1, 2));
    net.add(build_encap("E2", 3, 4));
    net.add(build_decap("D2"));
    net.add(build_decap("D1"));
    net.add(make_element("B", "sefl", parse_sefl("Forward(0)")));
    net.link({"A", 0}, {"E1", 0});
    net.link({"E1", 0}, {"E2", 0});
    if (probe) {
        net.add(make_element("X", "sefl", parse_sefl(*probe)));
        net.link({"E2", 0}, {"X", 0});
        net.link({"X", 0}, {"D2", 0});
    } else {
        net.link({"E2", 0}, {"D2", 0});
    }
    net.link({"D2", 0}, {"D1", 0});
    net.link({"D1", 0}, {"B", 0});
    return net;
}

Outcome tunnel_invariance() {
    Outcome o;
    const auto r = run(tunnel(std::nullopt), {"A", 0}, ip_packet());
    witness_all(r, "tunnel");
    o.expect(r.count(PathStatus::Delivered) == 1 && r.paths.size() == 1, "tunnel did not deliver one path");
    std::size_t fields = 0;
    if (o.pass) {
        const PathState& s = r.paths.front().state;
        o.expect(s.port_trace().back() == "B.out[0]", "path ends at " + s.port_trace().back());
        for (const auto& sv : s.visits().front().stacks) {
            if (sv.variable.is_meta)
                continue;
            ++fields;
            const auto v = check_invariant(s, sv.name);
            o.expect(v.invariant && current(s, sv.name).value.id == sv.frames.back(),
                     sv.name + " changed at " + v.modified_at);
        }
        o.expect(fields >= 10, "only " + std::to_string(fields) + " inner fields");
    }
    const auto probe = run(tunnel("Allocate(\"seen\", 16)\nAssign(\"seen\", TcpDst)\nForward(0)"), {"A", 0}, ip_packet());
    witness_all(probe, "tunnel-probe");
    o.expect(probe.count(PathStatus::Delivered) == 0 && probe.count(PathStatus::Failed) == 1,
             "L4 read inside the tunnel did not fail the path");
    if (o.pass)
        o.detail = std::to_string(fields) + " inner fields invariant; L4 read fails: " + probe.paths.front().state.reason;
    return o;
}

// ---- 6: NAT ----

Outcome nat_round_trip() {
    Outcome o;
    const std::uint64_t ext = *parse_ipv4("141.85.200.1");
    const auto mirror = [] { return build_click_element("M", "IPMirror", {}); };

    NetworkGraph one;
    one.add(build_nat("N", ext, 1000, 2000));
    one.add(mirror());
    one.link({"N", 0}, {"M", 0});
    one.link({"M", 0}, {"N", 1});
    const auto r = run(one, {"N", 0}, tcp_packet());
    witness_all(r, "nat");
    o.expect(feasible(r) == 1 && r.count(PathStatus::Delivered) == 1, "one NAT round trip is not a single path");
    if (o.pass) {
        const PathState& s = only_delivered(r).state;
        o.expect(current(s, "IpDst").value.id == entry_id(s, "IpSrc"), "IpSrc not restored");
        o.expect(current(s, "TcpDst").value.id == entry_id(s, "TcpSrc"), "TcpSrc not restored");
    }

    NetworkGraph outside;
    outside.add(build_nat("N", ext, 1000, 2000));
    outside.add(mirror());
    outside.add(make_element("X", "sefl", parse_sefl("Assign(TcpDst, 5)\nForward(0)")));
    outside.link({"N", 0}, {"M", 0});
    outside.link({"M", 0}, {"X", 0});
    outside.link({"X", 0}, {"N", 1});
    const auto u = run(outside, {"N", 0}, tcp_packet());
    witness_all(u, "nat-outside");
    o.expect(u.paths.size() == 1 && u.paths.front().state.status == PathStatus::Dropped,
             "reply outside the mapping was not unsatisfiable");

    const std::uint64_t ext2 = *parse_ipv4("8.8.4.4");
    NetworkGraph two;
    two.add(build_nat("N1", ext, 1000, 2000));
    two.add(build_nat("N2", ext2, 3000, 4000));
    two.add(mirror());
    two.link({"N1", 0}, {"N2", 0});
    two.link({"N2", 0}, {"M", 0});
    two.link({"M", 0}, {"N2", 1});
    two.link({"N2", 1}, {"N1", 1});
    const auto c = run(two, {"N1", 0}, tcp_packet());
    witness_all(c, "nat-cascade");
    o.expect(c.paths.size() == 1 && c.count(PathStatus::Delivered) == 1, "cascaded NATs branched");
    if (o.pass) {
        const PathState& s = only_delivered(c).state;
        o.expect(s.port_trace().back() == "N1.out[1]", "cascade ends at " + s.port_trace().back());
        o.expect(current(s, "IpDst").value.id == entry_id(s, "IpSrc"), "cascade lost IpSrc");
        o.expect(current(s, "TcpDst").value.id == entry_id(s, "TcpSrc"), "cascade lost TcpSrc");
        o.expect(current(s, "IpSrc").value.id == entry_id(s, "IpDst"), "cascade lost IpDst");
        const auto* mid = view_at(s, "N2.in[0]", "IpSrc");
        const auto* far = view_at(s, "M.in[0]", "IpSrc");
        o.expect(mid && mid->top == LinearTerm::constant(32, ext), "first NAT address not seen by the second");
        o.expect(far && far->top == LinearTerm::constant(32, ext2), "second NAT address not on the wire");
        std::set<std::string> keys;
        for (const auto& [k, st] : s.metadata())
            keys.insert(k);
        o.expect(keys.size() >= 8, "NAT state is not kept per element");
    }

    NetworkGraph plain;
    plain.add(make_element("P", "sefl", parse_sefl("Forward(0)")));
    o.expect(run(single(build_nat("N", ext, 1000, 2000)), {"N", 0}, tcp_packet()).paths.size() ==
                 run(plain, {"P", 0}, tcp_packet()).paths.size(),
             "NAT code added branches");
    if (o.pass)
        o.detail = "ids restored through 1 and 2 NATs, outside reply dropped, no extra paths";
    return o;
}

// ---- 7: encryption ----

Outcome encryption() {
    Outcome o;
    NetworkGraph net;
    net.add(build_encrypt("Enc", 0xdeadbeef));
    net.add(make_element("O", "sefl", parse_sefl("Forward(0)")));
    net.add(build_decrypt("Dec", 0xdeadbeef));
    net.link({"Enc", 0}, {"O", 0});
    net.link({"O", 0}, {"Dec", 0});
    const auto r = run(net, {"Enc", 0}, tcp_packet());
    witness_all(r, "crypto");
    o.expect(r.count(PathStatus::Delivered) == 1, "matching key did not deliver");
    if (o.pass) {
        const PathState& s = only_delivered(r).state;
        const ValueId original = entry_id(s, "TcpPayload");
        o.expect(current(s, "TcpPayload").value.id == original, "payload id not restored");
        const auto* seen = view_at(s, "O.in[0]", "TcpPayload");
        o.expect(seen && seen->frames.back() != original && !seen->top.is_concrete(),
                 "observer sees the plaintext payload");
        o.expect(!seen || std::find(seen->frames.begin(), seen->frames.end(), original) != seen->frames.end(),
                 "payload lost under encryption");
    }
    NetworkGraph wrong;
    wrong.add(build_encrypt("Enc", 1));
    wrong.add(build_decrypt("Dec", 2));
    wrong.link({"Enc", 0}, {"Dec", 0});
    const auto w = run(wrong, {"Enc", 0}, tcp_packet());
    witness_all(w, "crypto-wrong");
    o.expect(feasible(w) == 0 && w.count(PathStatus::Dropped) >= 1, "mismatched key was not dropped");
    if (o.pass)
        o.detail = "payload restored, fresh id in transit, wrong key dropped";
    return o;
}

// ---- 8: TCP options ----

Outcome tcp_options() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto model = single(build_tcp_options("F", OptionsPolicy::asa_default()));
    InternalSolver solver;
    const auto unsat_with = [&](const PathState& s, std::vector<Formula> extra) {
        auto f = s.formulas();
        f.insert(f.end(), extra.begin(), extra.end());
        return !solver.check(f).sat;
    };
    const auto lit = [](unsigned w, std::uint64_t v) { return LinearTerm::constant(w, v); };

    const auto r = run(model, {"F", 0}, Instr::block({tcp_packet(), tcp_options_allocation(kDefaultOptionKinds)}));
    witness_all(r, "options-symbolic");
    bool port80 = false, other = false;
    for (const auto& t : r.paths) {
        if (t.state.status != PathStatus::Delivered)
            continue;
        const PathState& s = t.state;
        const auto term = [&](const char* f) { return current(s, f).value.term; };
        const LinearTerm dst = term("TcpDst");
        const LinearTerm sack_in = view_at(s, "F.in[0]", "OPT4")->top;
        o.expect(unsat_with(s, {Formula::cmp(CmpOp::Ne, term("OPT30"), lit(8, 0))}), "multipath can pass");
        o.expect(unsat_with(s, {Formula::cmp(CmpOp::Ne, term("OPT2"), lit(8, 1))}), "MSS can be absent");
        o.expect(unsat_with(s, {Formula::cmp(CmpOp::Gt, term("VAL2"), lit(32, 1380))}), "MSS can exceed 1380");
        o.expect(unsat_with(s, {Formula::cmp(CmpOp::Eq, dst, lit(16, 80)),
                                Formula::cmp(CmpOp::Ne, term("OPT4"), lit(8, 0))}),
                 "SackOK passes to port 80");
        o.expect(unsat_with(s, {Formula::cmp(CmpOp::Ne, dst, lit(16, 80)),
                                Formula::cmp(CmpOp::Ne, term("OPT4"), sack_in)}),
                 "SackOK altered off port 80");
        port80 = port80 || !unsat_with(s, {Formula::cmp(CmpOp::Eq, dst, lit(16, 80))});
        other = other || !unsat_with(s, {Formula::cmp(CmpOp::Ne, dst, lit(16, 80))});
    }
    o.expect(port80 && other, "port 80 and other traffic not both delivered");

    const std::vector<unsigned> kinds = kDefaultOptionKinds;
    const OptionWidths toy{8, 8, 16};
    std::size_t combos = 0;
    for (unsigned mask = 0; mask < (1u << kinds.size()); ++mask) {
        for (std::uint64_t port : {80ull, 443ull}) {
            ++combos;
            std::string set = "Assign(TcpDst, " + std::to_string(port) + ")\n";
            std::map<unsigned, std::uint64_t> want;
            for (std::size_t i = 0; i < kinds.size(); ++i) {
                const std::uint64_t bit = (mask >> i) & 1u;
                set += "Assign(\"OPT" + std::to_string(kinds[i]) + "\", " + std::to_string(bit) + ")\n";
                want[kinds[i]] = bit;
            }
            want[30] = 0;
            want[2] = 1;
            if (port == 80)
                want[4] = 0;
            const auto c = run(model, {"F", 0}, with(Instr::block({tcp_packet(), tcp_options_allocation(kinds, toy)}), set));
            witness_all(c, "options-enumerated");
            o.expect(c.count(PathStatus::Delivered) >= 1, "combination " + std::to_string(mask) + " blocked");
            for (const auto& t : c.paths) {
                if (t.state.status != PathStatus::Delivered)
                    continue;
                for (const auto& [k, v] : want)
                    o.expect(current(t.state, "OPT" + std::to_string(k)).value.term == lit(8, v),
                             "OPT" + std::to_string(k) + " wrong for combination " + std::to_string(mask));
                for (unsigned k : {3u, 5u, 8u})
                    for (const char* p : {"OPT", "SIZE", "VAL"})
                        o.expect(check_invariant(t.state, p + std::to_string(k)).invariant,
                                 std::string(p) + std::to_string(k) + " modified");
                o.expect(unsat_with(t.state, {Formula::cmp(CmpOp::Gt, current(t.state, "VAL2").value.term,
                                                           lit(16, 1380))}),
                         "MSS above cap in combination " + std::to_string(mask));
            }
        }
    }
    const double s = since(t0);
    o.expect(s < 5.0, "took " + fmt("%.2f s", s));
    if (o.pass)
        o.detail = "symbolic proof + " + std::to_string(combos) + " combinations in " + fmt("%.2f s", s);
    return o;
}

// ---- 9: loop detection ----

Outcome loop_detection() {
    Outcome o;
    InternalSolver solver;
    struct Case {
        const char* name;
        std::uint64_t olo, ohi, nlo, nhi;
        bool loop;
    };
    const std::vector<Case> cases = {
        {"(a)", 0, 10, 20, 30, false}, {"(b)", 0, 10, 5, 15, false}, {"(c)", 0, 20, 5, 10, false}, {"(d)", 0, 10, 0, 20, true}};
    for (const auto& c : cases) {
        const auto side = [](SymbolId id, std::uint64_t lo, std::uint64_t hi) {
            const auto x = LinearTerm::symbol(16, id);
            return LoopSide{{x},
                            {Formula::conj({Formula::cmp(CmpOp::Ge, x, LinearTerm::constant(16, lo)),
                                            Formula::cmp(CmpOp::Le, x, LinearTerm::constant(16, hi))})}};
        };
        const auto v = check_loop(solver, side(1, c.olo, c.ohi), side(2, c.nlo, c.nhi));
        bool contained = true;
        for (std::uint64_t x = c.olo; x <= c.ohi; ++x)
            contained = contained && x >= c.nlo && x <= c.nhi;
        o.expect(v.loop == c.loop && contained == c.loop, std::string("case ") + c.name + " verdict");
        if (!v.loop)
            o.expect(v.witness.size() == 1 && v.witness[0] >= c.olo && v.witness[0] <= c.ohi &&
                         (v.witness[0] < c.nlo || v.witness[0] > c.nhi),
                     std::string("case ") + c.name + " witness");
    }

    const auto net = load_topology(std::filesystem::path(SYMNET_SOURCE_DIR) / "samples" / "router_cycle" / "topology.json");
    std::size_t counts[2];
    int i = 0;
    for (const auto& sel : {FieldSelector::of({"IpSrc", "IpDst"}), FieldSelector::every()}) {
        EngineOptions opts;
        opts.loop_selector = sel;
        const auto r = run(net, {"R1", 0}, tcp_packet(), opts);
        witness_all(r, "router-cycle");
        counts[i++] = detect_loops(r, solver).size();
    }
    o.expect(counts[0] == 1, std::to_string(counts[0]) + " loops with the address selector");
    o.expect(counts[1] == 0, std::to_string(counts[1]) + " loops with the full state");
    if (o.pass)
        o.detail = "cases (a)-(c) no loop, (d) loop; cycle found by addresses only";
    return o;
}

// ---- 10: engine vs enumeration ----

struct RCond {
    int lhs = 0;
    std::uint64_t add = 0;
    CmpOp op = CmpOp::Eq;
    bool rhs_var = false;
    int rhs = 0;
    std::uint64_t c = 0;
};

struct RStmt {
    enum Kind { AddConst, Copy, AddVar, Guard } kind;
    int dst = 0, src = 0;
    std::uint64_t c = 0;
    RCond cond;
};

struct RTerm {
    enum Kind { Forward, Fork, Fail, If } kind = Forward;
    unsigned port = 0;
    RCond cond;
    std::shared_ptr<RTerm> then, other;
};

struct RElement {
    std::vector<RStmt> body;
    std::shared_ptr<RTerm> end;
    std::array<int, 2> link{-1, -1};
};

const char* kVars[] = {"\"x\"", "\"y\""};

std::string cond_text(const RCond& c) {
    std::string s = kVars[c.lhs];
    if (c.add)
        s += " + " + std::to_string(c.add);
    s += " " + std::string(to_string(c.op)) + " ";
    s += c.rhs_var ? kVars[c.rhs] : std::to_string(c.c);
    return s;
}

bool cond_eval(const RCond& c, const std::array<std::uint64_t, 2>& v) {
    return compare(c.op, (v[c.lhs] + c.add) & 0xff, c.rhs_var ? v[c.rhs] : c.c);
}

std::string term_text(const RTerm& t) {
    switch (t.kind) {
    case RTerm::Forward:
        return "Forward(" + std::to_string(t.port) + ")";
    case RTerm::Fork:
        return "Fork(0, 1)";
    case RTerm::Fail:
        return "Fail(\"stop\")";
    case RTerm::If:
        return "If(" + cond_text(t.cond) + ", " + term_text(*t.then) + ", " + term_text(*t.other) + ")";
    }
    return {};
}

RCond random_cond(std::mt19937_64& rng) {
    RCond c;
    c.lhs = static_cast<int>(rng() % 2);
    c.add = rng() % 3 == 0 ? rng() % 256 : 0;
    c.op = static_cast<CmpOp>(rng() % 6);
    c.rhs_var = rng() % 3 == 0;
    c.rhs = 1 - c.lhs;
    c.c = rng() % 256;
    return c;
}

std::shared_ptr<RTerm> random_term(std::mt19937_64& rng, int depth) {
    auto t = std::make_shared<RTerm>();
    const auto pick = rng() % 8;
    if (depth < 2 && pick < 4) {
        t->kind = RTerm::If;
        t->cond = random_cond(rng);
        t->then = random_term(rng, depth + 1);
        t->other = random_term(rng, depth + 1);
    } else if (pick < 6) {
        t->kind = RTerm::Forward;
        t->port = static_cast<unsigned>(rng() % 2);
    } else if (pick < 7) {
        t->kind = RTerm::Fork;
    } else {
        t->kind = RTerm::Fail;
    }
    return t;
}

struct RandomNet {
    std::vector<RElement> elements;

    NetworkGraph graph() const {
        NetworkGraph g;
        for (std::size_t i = 0; i < elements.size(); ++i) {
            std::string text;
            for (const auto& s : elements[i].body) {
                const std::string d = kVars[s.dst];
                switch (s.kind) {
                case RStmt::AddConst:
                    text += "Assign(" + d + ", " + d + " + " + std::to_string(s.c) + ")\n";
                    break;
                case RStmt::Copy:
                    text += "Assign(" + d + ", " + kVars[s.src] + ")\n";
                    break;
                case RStmt::AddVar:
                    text += "Assign(" + d + ", " + d + " + " + kVars[s.src] + ")\n";
                    break;
                case RStmt::Guard:
                    text += "Constrain(" + cond_text(s.cond) + ")\n";
                    break;
                }
            }
            text += term_text(*elements[i].end) + "\n";
            g.add(make_element("E" + std::to_string(i), "sefl", parse_sefl(text), 1, 2));
        }
        for (std::size_t i = 0; i < elements.size(); ++i)
            for (unsigned k = 0; k < 2; ++k)
                if (elements[i].link[k] >= 0)
                    g.link({"E" + std::to_string(i), k}, {"E" + std::to_string(elements[i].link[k]), 0});
        return g;
    }

    void exec(std::size_t i, std::array<std::uint64_t, 2> v, std::vector<std::string>& out) const {
        const RElement& e = elements[i];
        for (const auto& s : e.body) {
            switch (s.kind) {
            case RStmt::AddConst:
                v[s.dst] = (v[s.dst] + s.c) & 0xff;
                break;
            case RStmt::Copy:
                v[s.dst] = v[s.src];
                break;
            case RStmt::AddVar:
                v[s.dst] = (v[s.dst] + v[s.src]) & 0xff;
                break;
            case RStmt::Guard:
                if (!cond_eval(s.cond, v))
                    return;
                break;
            }
        }
        const std::string id = "E" + std::to_string(i);
        const std::function<void(const RTerm&)> finish = [&](const RTerm& t) {
            switch (t.kind) {
            case RTerm::Forward:
                emit(i, t.port, v, out);
                break;
            case RTerm::Fork:
                emit(i, 0, v, out);
                emit(i, 1, v, out);
                break;
            case RTerm::Fail:
                out.push_back("failed@" + id + ".in[0]");
                break;
            case RTerm::If:
                finish(cond_eval(t.cond, v) ? *t.then : *t.other);
                break;
            }
        };
        finish(*e.end);
    }

    void emit(std::size_t i, unsigned port, const std::array<std::uint64_t, 2>& v, std::vector<std::string>& out) const {
        if (elements[i].link[port] >= 0)
            exec(static_cast<std::size_t>(elements[i].link[port]), v, out);
        else
            out.push_back("delivered@E" + std::to_string(i) + ".out[" + std::to_string(port) + "]");
    }
};

RandomNet random_net(std::mt19937_64& rng) {
    RandomNet n;
    const std::size_t count = 1 + rng() % 4;
    n.elements.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        RElement& e = n.elements[i];
        const std::size_t stmts = rng() % 4;
        for (std::size_t s = 0; s < stmts; ++s) {
            RStmt st{static_cast<RStmt::Kind>(rng() % 4)};
            if (st.kind == RStmt::Guard && rng() % 2)
                st.kind = RStmt::AddConst;
            st.dst = static_cast<int>(rng() % 2);
            st.src = 1 - st.dst;
            st.c = rng() % 256;
            st.cond = random_cond(rng);
            e.body.push_back(st);
        }
        e.end = random_term(rng, 0);
        for (int k = 0; k < 2; ++k)
            if (i + 1 < count && rng() % 3 != 0)
                e.link[k] = static_cast<int>(i + 1 + rng() % (count - i - 1));
    }
    return n;
}

Outcome engine_vs_enumeration() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1010);
    const Instr init =
        parse_instructions("Allocate(\"x\", 8)\nAssign(\"x\", SymbolicValue())\nAllocate(\"y\", 8)\nAssign(\"y\", SymbolicValue())");
    std::size_t total_paths = 0;
    for (int round = 0; round < 25 && o.pass; ++round) {
        const RandomNet n = random_net(rng);
        const auto r = run(n.graph(), {"E0", 0}, init);
        witness_all(r, "random-net");
        struct Region {
            const PathState* state;
            std::string label;
        };
        std::vector<Region> regions;
        SymbolId sx = 0, sy = 0;
        for (const auto& t : r.paths) {
            o.expect(t.state.status != PathStatus::Loop && t.state.status != PathStatus::Live, "unexpected status");
            if (t.state.status == PathStatus::Dropped)
                continue;
            const auto x = entry_symbol(t.state, "x");
            const auto y = entry_symbol(t.state, "y");
            o.expect(x && y, "entry symbols missing");
            if (!x || !y)
                break;
            sx = *x;
            sy = *y;
            regions.push_back({&t.state, std::string(to_string(t.state.status)) + "@" + t.state.port_trace().back()});
        }
        total_paths += regions.size();
        for (std::uint64_t x = 0; x < 256 && o.pass; ++x) {
            for (std::uint64_t y = 0; y < 256; ++y) {
                std::vector<std::string> want;
                n.exec(0, {x, y}, want);
                const Assignment a{{sx, x}, {sy, y}};
                std::vector<std::string> got;
                for (const auto& reg : regions)
                    if (holds(*reg.state, a))
                        got.push_back(reg.label);
                std::sort(want.begin(), want.end());
                std::sort(got.begin(), got.end());
                if (got != want) {
                    o.expect(false, "network " + std::to_string(round) + " differs at x=" + std::to_string(x) +
                                        " y=" + std::to_string(y));
                    break;
                }
            }
        }
    }
    const double s = since(t0);
    o.expect(s < 300.0, "took " + fmt("%.1f s", s));
    if (o.pass)
        o.detail = "25 networks, " + std::to_string(total_paths) + " paths, 65536 packets each in " + fmt("%.1f s", s);
    return o;
}

// ---- 11: solver completeness ----

struct SLit {
    unsigned w = 1;
    std::array<std::uint64_t, 3> a{}, b{};
    std::uint64_t c = 0, d = 0;
    CmpOp op = CmpOp::Eq;
};

struct SNode {
    enum Kind { Leaf, And, Or, Not } kind = Leaf;
    std::size_t lit = 0;
    std::vector<SNode> kids;
};

struct SCase {
    std::vector<unsigned> widths;
    std::vector<SLit> lits;
    SNode root;
};

bool eval_node(const SCase& c, const SNode& n, const std::array<std::uint64_t, 3>& v) {
    switch (n.kind) {
    case SNode::Leaf: {
        const SLit& l = c.lits[n.lit];
        std::uint64_t lhs = l.c, rhs = l.d;
        for (std::size_t i = 0; i < c.widths.size(); ++i) {
            lhs += l.a[i] * v[i];
            rhs += l.b[i] * v[i];
        }
        return compare(l.op, lhs & width_mask(l.w), rhs & width_mask(l.w));
    }
    case SNode::And:
        for (const auto& k : n.kids)
            if (!eval_node(c, k, v))
                return false;
        return true;
    case SNode::Or:
        for (const auto& k : n.kids)
            if (eval_node(c, k, v))
                return true;
        return false;
    case SNode::Not:
        return !eval_node(c, n.kids[0], v);
    }
    return false;
}

Formula to_formula(const SCase& c, const SNode& n) {
    switch (n.kind) {
    case SNode::Leaf: {
        const SLit& l = c.lits[n.lit];
        LinearTerm lhs = LinearTerm::constant(l.w, l.c), rhs = LinearTerm::constant(l.w, l.d);
        for (std::size_t i = 0; i < c.widths.size(); ++i) {
            if (l.a[i])
                lhs = lhs + LinearTerm::symbol(l.w, i + 1).scaled(l.a[i]);
            if (l.b[i])
                rhs = rhs + LinearTerm::symbol(l.w, i + 1).scaled(l.b[i]);
        }
        return Formula::cmp(l.op, lhs, rhs);
    }
    case SNode::Not:
        return Formula::negation(to_formula(c, n.kids[0]));
    default: {
        std::vector<Formula> kids;
        for (const auto& k : n.kids)
            kids.push_back(to_formula(c, k));
        return n.kind == SNode::And ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
    }
    }
}

std::uint64_t random_coeff(std::mt19937_64& rng, unsigned w) {
    switch (rng() % 5) {
    case 0:
        return 1;
    case 1:
        return width_mask(w);
    case 2:
        return 2;
    case 3:
        return 3 & width_mask(w);
    default:
        return rng() & width_mask(w);
    }
}

SNode random_tree(std::mt19937_64& rng, SCase& c, std::size_t lits) {
    SNode n;
    if (lits == 1) {
        SLit l;
        const std::size_t v = rng() % c.widths.size();
        l.w = c.widths[v];
        for (std::size_t i = 0; i < c.widths.size(); ++i) {
            if (c.widths[i] != l.w)
                continue;
            if (i == v || rng() % 3 == 0)
                l.a[i] = random_coeff(rng, l.w);
            if (rng() % 3 == 0)
                l.b[i] = random_coeff(rng, l.w);
        }
        if (!l.a[v])
            l.a[v] = 1;
        l.c = rng() % 2 ? rng() & width_mask(l.w) : 0;
        l.d = rng() & width_mask(l.w);
        l.op = static_cast<CmpOp>(rng() % 6);
        c.lits.push_back(l);
        n.lit = c.lits.size() - 1;
    } else {
        n.kind = rng() % 2 ? SNode::And : SNode::Or;
        const std::size_t parts = std::min<std::size_t>(lits, 2 + rng() % 2);
        std::size_t left = lits;
        for (std::size_t p = 0; p < parts; ++p) {
            const std::size_t take = p + 1 == parts ? left : 1 + rng() % (left - (parts - p - 1));
            n.kids.push_back(random_tree(rng, c, take));
            left -= take;
        }
    }
    if (rng() % 5 == 0) {
        SNode neg;
        neg.kind = SNode::Not;
        neg.kids.push_back(std::move(n));
        return neg;
    }
    return n;
}

Outcome solver_completeness() {
    constexpr unsigned kTotalBits = 18;
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1111);
    InternalSolver solver;
    std::size_t sat = 0;
    for (int round = 0; round < 10000 && o.pass; ++round) {
        SCase c;
        do {
            c.widths.assign(1 + rng() % 3, 0);
            for (auto& w : c.widths)
                w = 1 + static_cast<unsigned>(rng() % 10);
            if (c.widths.size() > 1 && rng() % 2)
                c.widths[1] = c.widths[0];
        } while (std::accumulate(c.widths.begin(), c.widths.end(), 0u) > kTotalBits);
        c.root = random_tree(rng, c, 1 + rng() % 12);

        bool expected = false;
        const std::uint64_t w0 = std::uint64_t{1} << c.widths[0];
        const std::uint64_t w1 = c.widths.size() > 1 ? std::uint64_t{1} << c.widths[1] : 1;
        const std::uint64_t w2 = c.widths.size() > 2 ? std::uint64_t{1} << c.widths[2] : 1;
        for (std::uint64_t a = 0; a < w0 && !expected; ++a)
            for (std::uint64_t b = 0; b < w1 && !expected; ++b)
                for (std::uint64_t d = 0; d < w2 && !expected; ++d)
                    expected = eval_node(c, c.root, {a, b, d});

        const Formula f = to_formula(c, c.root);
        SolveResult r;
        try {
            r = solver.check({f});
        } catch (const std::exception& e) {
            o.expect(false, "case " + std::to_string(round) + ": " + e.what() + " on " + f.to_string());
            break;
        }
        o.expect(r.sat == expected, "case " + std::to_string(round) + " verdict " + (r.sat ? "sat" : "unsat") +
                                        " on " + f.to_string());
        if (r.sat) {
            ++sat;
            std::array<std::uint64_t, 3> v{};
            for (std::size_t i = 0; i < c.widths.size(); ++i) {
                auto it = r.model.find(i + 1);
                v[i] = it == r.model.end() ? 0 : it->second;
                o.expect(v[i] <= width_mask(c.widths[i]), "model value out of range");
            }
            o.expect(f.evaluate(r.model) && eval_node(c, c.root, v), "model does not satisfy case " + std::to_string(round));
        }
    }
    if (o.pass)
        o.detail = "10000 formulas (" + std::to_string(sat) + " sat) in " + fmt("%.1f s", since(t0));
    return o;
}

// ---- 12: witnesses ----

Outcome witnesses() {
    Outcome o;
    o.expect(g_witness.paths > 0, "no paths collected");
    o.expect(g_witness.bad == 0, std::to_string(g_witness.bad) + " bad witnesses, first: " + g_witness.first_problem);
    if (o.pass)
        o.detail = std::to_string(g_witness.paths) + " feasible paths, every witness satisfies its constraints";
    return o;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"egress switch branching", egress_branching},
        {"switch variant equivalence", switch_variants},
        {"router longest prefix match", router_lpm},
        {"router branching", router_branching},
        {"tunnel invariance", tunnel_invariance},
        {"NAT round trip", nat_round_trip},
        {"encryption", encryption},
        {"TCP options", tcp_options},
        {"loop detection", loop_detection},
        {"engine vs enumeration", engine_vs_enumeration},
        {"solver completeness", solver_completeness},
        {"witness synthesis", witnesses},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, body] : criteria) {
        ++index;
        if (!only.empty() && !only.count(index))
            continue;
        Outcome out;
        const auto t0 = Clock::now();
        try {
            out = body();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        failed += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS" : "FAIL") << " [" << (index < 10 ? "0" : "") << index << "] " << name << " ("
                  << fmt("%.1f s", since(t0)) << "): " << out.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
