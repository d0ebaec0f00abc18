#include "symnet/engine.hpp"
#include "symnet/error.hpp"
#include "symnet/ingest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace symnet;

namespace {

std::size_t error_line(const std::function<void()>& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("symnet_ingest_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(MacTable, ParsesNormalizedLines) {
    const auto t = parse_mac_table("# vlan,mac,port\n302,00:aa:00:aa:00:aa,3\n\n1,ff:ff:ff:ff:ff:fe,0 # trailing\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0], (MacEntry{302, 0x00aa00aa00aaull, 3}));
    EXPECT_EQ(t[1], (MacEntry{1, 0xfffffffffffeull, 0}));
}

TEST(MacTable, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line([] { parse_mac_table("1,00:00:00:00:00:01,1\n1,zz:00:00:00:00:01,1\n"); }), 2u);
    EXPECT_EQ(error_line([] { parse_mac_table("\n\n1,00:00:00:00:00:01,99999\n"); }), 3u);
    EXPECT_EQ(error_line([] { parse_mac_table("1,00:00:00:00:00:01\n"); }), 1u);
    EXPECT_EQ(error_line([] { parse_mac_table("5000,00:00:00:00:00:01,1\n"); }), 1u);
    EXPECT_EQ(error_line([] { parse_mac_table("1,00:00:00:00:00:01,5\n", 4); }), 1u);
}

TEST(MacTable, ConflictingDuplicateIsRejected) {
    const std::string text = "1,00:00:00:00:00:01,1\n2,00:00:00:00:00:01,2\n1,00:00:00:00:00:01,3\n";
    try {
        parse_mac_table(text);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("DuplicateMac(3)"), std::string::npos);
    }
    EXPECT_EQ(parse_mac_table("1,00:00:00:00:00:01,1\n1,00:00:00:00:00:01,1\n").size(), 1u);
}

TEST(MacTable, ShowMacAdapter) {
    const std::string show = R"(          Mac Address Table
-------------------------------------------

Vlan    Mac Address       Type        Ports
----    -----------       --------    -----
 All    0100.0ccc.cccc    STATIC      CPU
 302    00aa.00aa.00aa    DYNAMIC     Gi1/0/3
 302    00aa.00aa.00ab    DYNAMIC     Gi1/0/7
  10    00AA.00aa.00ac    DYNAMIC     Gi1/0/3
Total Mac Addresses for this criterion: 4
)";
    const std::string csv = show_mac_to_csv(show);
    EXPECT_EQ(csv, "302,00:aa:00:aa:00:aa,0\n302,00:aa:00:aa:00:ab,1\n10,00:aa:00:aa:00:ac,0\n");
    EXPECT_EQ(parse_mac_table(csv).size(), 3u);
}

TEST(Fib, ParsesAndAssignsInterfaces) {
    const auto t = parse_fib("192.168.0.0/24,If1\n10.0.0.0/8,If0\n0.0.0.0/0,If1\n");
    ASSERT_EQ(t.entries.size(), 3u);
    EXPECT_EQ(t.entries[0], (FibEntry{0xC0A80000, 24, 0}));
    EXPECT_EQ(t.entries[1], (FibEntry{0x0A000000, 8, 1}));
    EXPECT_EQ(t.entries[2], (FibEntry{0, 0, 0}));
    EXPECT_EQ(t.interfaces, (std::vector<std::string>{"If1", "If0"}));
    EXPECT_TRUE(t.warnings.empty());
}

TEST(Fib, ExplicitInterfaceMapWins) {
    const auto t = parse_fib("192.168.0.0/24,If1\n10.0.0.0/8,If0\n11.0.0.0/8,If2\n", {{"If0", 0}, {"If1", 1}});
    EXPECT_EQ(t.entries[0].port, 1u);
    EXPECT_EQ(t.entries[1].port, 0u);
    EXPECT_EQ(t.entries[2].port, 2u);
}

TEST(Fib, CanonicalizesHostBitsWithWarning) {
    const auto t = parse_fib("10.0.0.1/8,If0\n");
    ASSERT_EQ(t.entries.size(), 1u);
    EXPECT_EQ(t.entries[0].base, 0x0A000000u);
    ASSERT_EQ(t.warnings.size(), 1u);
    EXPECT_NE(t.warnings[0].find("10.0.0.0/8"), std::string::npos);
}

TEST(Fib, RejectsMalformedLines) {
    EXPECT_EQ(error_line([] { parse_fib("1.2.3.4/33,If0\n"); }), 1u);
    EXPECT_EQ(error_line([] { parse_fib("10.0.0.0/8,If0\n1.2.3/8,If0\n"); }), 2u);
    EXPECT_EQ(error_line([] { parse_fib("1.2.3.4,If0\n"); }), 1u);
    EXPECT_EQ(error_line([] { parse_fib("1.2.3.4/8\n"); }), 1u);
}

TEST(Click, DeclarationsAndChain) {
    const auto cfg = parse_click("m :: IPMirror; d :: DecIPTTL; m -> d;");
    EXPECT_EQ(cfg.order, (std::vector<std::string>{"m", "d"}));
    EXPECT_EQ(cfg.graph.elements().size(), 2u);
    EXPECT_EQ(cfg.graph.links().size(), 1u);
    EXPECT_EQ(cfg.graph.next({"m", 0}), (PortRef{"d", 0}));
}

TEST(Click, PortSelectorsInlineDeclarationsAndComments) {
    const auto cfg = parse_click(R"(
// classifier with two outputs
c :: IPClassifier(tcp, -);
c [0] -> t :: DecIPTTL -> [0] p :: CheckPaint(2);
/* anonymous element */
c [1] -> SetIPChecksum;
)");
    EXPECT_EQ(cfg.graph.elements().size(), 4u);
    EXPECT_EQ(cfg.graph.next({"c", 0}), (PortRef{"t", 0}));
    EXPECT_EQ(cfg.graph.next({"t", 0}), (PortRef{"p", 0}));
    const auto anon = cfg.graph.next({"c", 1});
    ASSERT_TRUE(anon);
    EXPECT_EQ(cfg.graph.element(anon->element).kind, "SetIPChecksum");
}

TEST(Click, Errors) {
    try {
        parse_click("x :: FancyBox();");
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("UnsupportedElement(\"FancyBox\")"), std::string::npos);
    }
    EXPECT_THROW(parse_click("m :: IPMirror; d :: DecIPTTL; m [3] -> d;"), ModelError);
    EXPECT_THROW(parse_click("m :: IPMirror; m -> nowhere;"), ParseError);
    EXPECT_THROW(parse_click("m :: IPMirror; m :: IPMirror;"), ParseError);
    EXPECT_EQ(error_line([] { parse_click("m :: IPMirror;\n\nd :: DecIPTTL(;\n"); }), 3u);
}

TEST(Click, StatefulFirewallBounce) {
    const auto cfg = parse_click(R"(
rw :: IPRewriter;
mirror :: IPMirror;
rw [0] -> mirror -> [1] rw;
)");
    EXPECT_EQ(cfg.graph.links().size(), 2u);
    EXPECT_EQ(cfg.graph.next({"mirror", 0}), (PortRef{"rw", 1}));
    EXPECT_NO_THROW(cfg.graph.validate());
}

TEST(Topology, RoundTripsThroughPrinter) {
    TopologySpec spec;
    spec.elements.push_back({"A", "router", "fib.txt", R"({"interfaces":{"If0":0}})"});
    spec.elements.push_back({"B", "switch", "macs.txt", "{}"});
    spec.elements.push_back({"N", "nat", "", R"({"external":"1.2.3.4","portHi":2000,"portLo":1000})"});
    spec.links.push_back({"A.out[0]", "B.in[0]"});
    const TopologySpec back = parse_topology_spec(print_topology(spec));
    EXPECT_EQ(back, spec);
    EXPECT_EQ(print_topology(back), print_topology(spec));
}

TEST(Topology, BuildsRouterToSwitch) {
    const auto dir = scratch_dir("build");
    write(dir / "fib.txt", "10.0.0.0/8,If0\n0.0.0.0/0,If1\n");
    write(dir / "macs.txt", "1,00:00:00:00:00:01,0\n1,00:00:00:00:00:02,1\n");
    const std::string topo = R"({"elements":[
        {"id":"A","kind":"router","source":"fib.txt"},
        {"id":"B","kind":"switch","source":"macs.txt"}],
      "links":[{"from":"A.out[0]","to":"B.in[0]"}]})";
    write(dir / "topo.json", topo);
    const NetworkGraph g = load_topology(dir / "topo.json");
    EXPECT_EQ(g.elements().size(), 2u);
    EXPECT_EQ(g.links().size(), 1u);
    EXPECT_EQ(g.element("A").outputs, 2u);
}

TEST(Topology, Errors) {
    const auto dir = scratch_dir("errors");
    write(dir / "fib.txt", "10.0.0.0/8,If0\n0.0.0.0/0,If1\n");
    const auto topo = [](const std::string& links) {
        return R"({"elements":[{"id":"A","kind":"router","source":"fib.txt"},{"id":"B","kind":"decap"}],"links":[)" +
               links + "]}";
    };
    EXPECT_THROW(parse_topology(topo(R"({"from":"A.out[9]","to":"B.in[0]"})"), dir), ModelError);
    EXPECT_THROW(parse_topology(topo(R"({"from":"A.out[0]","to":"C.in[0]"})"), dir), ModelError);
    EXPECT_THROW(parse_topology(topo(R"({"from":"A.out[0]","to":"B.in[0]"},{"from":"A.out[0]","to":"B.in[0]"})"), dir),
                 ModelError);
    EXPECT_THROW(parse_topology(topo(R"({"from":"A.in[0]","to":"B.in[0]"})"), dir), ModelError);
    EXPECT_THROW(parse_topology(topo(""), dir / "nowhere"), ModelError);
    EXPECT_THROW(load_topology(dir / "missing.json"), ModelError);
    EXPECT_THROW(parse_topology_spec("{\"elements\": [ {\"id\": 3} ]}"), ParseError);
    EXPECT_EQ(error_line([] { parse_topology_spec("{\n\"elements\": [\n,]}"); }), 3u);
}

TEST(Topology, TunnelChainIsALine) {
    const std::string topo = R"json({"elements":[
        {"id":"A","kind":"sefl","params":{"code":"Forward(0)"}},
        {"id":"E1","kind":"encap","params":{"src":"1.1.1.1","dst":"2.2.2.2"}},
        {"id":"E2","kind":"encap","params":{"src":"3.3.3.3","dst":"4.4.4.4"}},
        {"id":"D2","kind":"decap"},
        {"id":"D1","kind":"decap"},
        {"id":"B","kind":"sefl","params":{"code":"Forward(0)"}}],
      "links":[{"from":"A.out[0]","to":"E1.in[0]"},{"from":"E1.out[0]","to":"E2.in[0]"},
               {"from":"E2.out[0]","to":"D2.in[0]"},{"from":"D2.out[0]","to":"D1.in[0]"},
               {"from":"D1.out[0]","to":"B.in[0]"}]})json";
    const NetworkGraph g = parse_topology(topo);
    EXPECT_EQ(g.elements().size(), 6u);
    EXPECT_EQ(g.links().size(), 5u);
    PortRef at{"A", 0};
    std::vector<std::string> order{"A"};
    while (const auto n = g.next(at)) {
        order.push_back(n->element);
        at = {n->element, 0};
    }
    EXPECT_EQ(order, (std::vector<std::string>{"A", "E1", "E2", "D2", "D1", "B"}));
}

TEST(PortRefs, Parse) {
    EXPECT_EQ(parse_port_ref("A.out[1]", true), (PortRef{"A", 1}));
    EXPECT_EQ(parse_port_ref("a.b.in2", false), (PortRef{"a.b", 2}));
    EXPECT_THROW(parse_port_ref("A.out[x]", true), ModelError);
    EXPECT_THROW(parse_port_ref(".out[1]", true), ModelError);
}

TEST(IngestFuzz, RandomInputsOnlyRaiseErrors) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> seeds = {
        "1,00:00:00:00:00:01,1\n", "10.0.0.0/8,If0\n", "m :: IPMirror; d :: DecIPTTL; m [0] -> [0] d;",
        R"({"elements":[{"id":"A","kind":"decap"}],"links":[]})",
        "InputPort(0): If(TcpDst == 80, Forward(0), Fail(\"x\"))"};
    const std::string alphabet = "0123456789abcdef:,./[]()->;\n #\"{}:,IfOPTx*";
    for (int i = 0; i < 3000; ++i) {
        std::string s = seeds[rng() % seeds.size()];
        const int edits = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < edits; ++k) {
            const std::size_t at = s.empty() ? 0 : rng() % s.size();
            switch (rng() % 4) {
            case 0: if (!s.empty()) s.erase(at, 1); break;
            case 1: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), alphabet[rng() % alphabet.size()]); break;
            case 2: if (!s.empty()) s[at] = static_cast<char>(rng() % 256); break;
            default: s = s.substr(0, at); break;
            }
        }
        const auto attempt = [&](auto&& f) {
            try {
                f();
            } catch (const ParseError&) {
            } catch (const ModelError&) {
            }
        };
        attempt([&] { parse_mac_table(s); });
        attempt([&] { parse_fib(s); });
        attempt([&] { show_mac_to_csv(s); });
        attempt([&] { parse_click(s); });
        attempt([&] { parse_topology_spec(s); });
        attempt([&] { parse_sefl(s); });
    }
}
