#include "symnet/error.hpp"
#include "symnet/ingest.hpp"
#include "symnet/report.hpp"
#include "symnet/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace symnet;

namespace {

constexpr int kClean = 0;
constexpr int kFindings = 1;
constexpr int kInputError = 2;

struct RunArgs {
    std::string topology;
    std::string inject;
    std::string packet = "tcp";
    std::vector<std::string> query;
    std::string loop_fields = "IpSrc,IpDst";
    bool valid_packets = false;
    bool lazy = false;
    std::uint64_t budget = 1000000;
    std::string out;
    bool timing = false;
};

struct GenArgs {
    std::string kind;
    std::size_t size = 1000;
    std::uint64_t seed = 1;
    unsigned ports = 20;
    std::string out;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty())
            out.push_back(item);
    return out;
}

FieldSelector selector(const std::string& text) {
    if (text == "all" || text == "ALL" || text == "*")
        return FieldSelector::every();
    const auto fields = split_list(text);
    if (fields.empty())
        throw QueryError("empty --loop-fields");
    return FieldSelector::of(fields);
}

Instr packet(const std::string& spec) {
    for (const char* name : {"tcp", "udp", "udp-less-tcp-fields", "ip", "ether"})
        if (spec == name)
            return packet_template(spec);
    if (!std::filesystem::exists(spec))
        throw ModelError("unknown packet template or missing init file \"" + spec + "\"");
    try {
        return parse_instructions(read_file(spec));
    } catch (const ParseError& e) {
        throw ModelError(spec + ": " + e.what());
    }
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f)
        throw ModelError("cannot write " + out);
    f << text;
}

int run(const RunArgs& a) {
    if (a.query.empty())
        throw QueryError("--query is required (reach <port> | loops | invariants <fields> | synth)");
    const std::string& q = a.query[0];
    const std::string arg = a.query.size() > 1 ? a.query[1] : "";
    if ((q == "reach" || q == "invariants") && arg.empty())
        throw QueryError("query " + q + " needs an argument");
    if ((q == "loops" || q == "synth") && !arg.empty())
        throw QueryError("query " + q + " takes no argument");
    if (q != "reach" && q != "loops" && q != "invariants" && q != "synth")
        throw QueryError("unknown query \"" + q + "\"");
    if (q == "reach")
        canonical_port(arg);

    const NetworkGraph net = load_topology(a.topology);
    const PortRef entry = parse_port_ref(canonical_port(a.inject), false);
    if (!net.has(entry.element))
        throw ModelError("injection element " + entry.element + " not in topology");
    const Instr init = packet(a.packet);

    auto solver = make_solver_from_env();
    EngineOptions options;
    options.lazy = a.lazy;
    options.path_budget = a.budget;
    options.loop_selector = selector(a.loop_fields);
    Engine engine(net, *solver, options);
    const ExecutionResult result = engine.inject(entry, init);

    std::vector<PathReport> reports;
    std::vector<LoopReport> loops;
    int status = kClean;
    if (q == "reach") {
        reports = reachability(result, arg);
        if (reports.empty())
            status = kFindings;
    } else {
        for (const auto& t : result.paths)
            reports.push_back(make_report(t));
    }
    if (q == "loops") {
        loops = detect_loops(result, *solver);
        if (!loops.empty())
            status = kFindings;
    }
    if (q == "invariants") {
        const auto fields = split_list(arg);
        for (auto& r : reports) {
            const auto& path = result.paths[r.id].state;
            if (path.status != PathStatus::Delivered)
                continue;
            r.fields = field_verdicts(path, fields);
            for (const auto& v : r.fields)
                if (!v.error.empty() || !v.invariant)
                    status = kFindings;
        }
    }
    if (q == "synth" || a.valid_packets) {
        for (auto& r : reports) {
            const auto& t = result.paths[r.id];
            if (t.state.status == PathStatus::Dropped)
                continue;
            if (auto w = synth_test_packet(t, *solver, a.valid_packets))
                r.witness = w->fields;
        }
    }
    ReportOptions ro;
    ro.timing = a.timing;
    emit(report_json(reports, result.stats, q == "loops" ? &loops : nullptr, ro), a.out);
    return status;
}

std::string hex_mac(std::uint64_t v) { return format_mac(v & 0xffffffffffffull); }

int gen(const GenArgs& a) {
    if (a.size < 1)
        throw QueryError("--size must be at least 1");
    if (a.ports < 1)
        throw QueryError("--ports must be at least 1");
    std::mt19937_64 rng(a.seed);
    std::string text;
    if (a.kind == "mac-table") {
        std::set<std::uint64_t> used;
        text += "# vlan,mac,port\n";
        while (used.size() < a.size) {
            // locally administered unicast
            const std::uint64_t mac = ((rng() & 0xfcffffffffffull) | 0x020000000000ull);
            if (!used.insert(mac).second)
                continue;
            text += "1," + hex_mac(mac) + "," + std::to_string(rng() % a.ports) + "\n";
        }
    } else if (a.kind == "fib") {
        if (a.size > (1u << 24))
            throw QueryError("--size too large for distinct prefixes");
        std::set<std::pair<std::uint64_t, unsigned>> used;
        text += "# prefix/len,interface\n";
        while (used.size() < a.size) {
            const unsigned len = 8 + static_cast<unsigned>(rng() % 17);
            const std::uint64_t mask = (0xffffffffull << (32 - len)) & 0xffffffffull;
            const std::uint64_t base = (rng() & 0xffffffffull) & mask;
            if (base >> 24 == 0 || !used.insert({base, len}).second)
                continue;
            text += format_ipv4(base) + "/" + std::to_string(len) + ",If" + std::to_string(rng() % a.ports) + "\n";
        }
    } else {
        throw QueryError("unknown generator \"" + a.kind + "\" (mac-table | fib)");
    }
    emit(text, a.out);
    return kClean;
}

int smt_solve(const std::string& file) {
    const SmtQuery q = parse_smtlib(read_file(file));
    InternalSolver solver;
    const SolveResult r = solver.check(q.assertions);
    std::cout << format_smt_answer(r, q.widths);
    return kClean;
}

int fmt(const std::string& file) {
    const std::string text = read_file(file);
    if (std::filesystem::path(file).extension() == ".json")
        std::cout << print_topology(parse_topology_spec(text));
    else
        std::cout << print(parse_sefl(text));
    return kClean;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic execution of network models"};
    app.require_subcommand(0, 1);

    RunArgs run_args;
    app.add_option("--topology", run_args.topology, "Topology JSON file");
    app.add_option("--inject", run_args.inject, "Injection port, e.g. A.in[0]");
    app.add_option("--packet", run_args.packet, "tcp | udp-less-tcp-fields | ip | ether | SEFL init file");
    app.add_option("--query", run_args.query, "reach <port> | loops | invariants <f1,f2> | synth")->expected(1, 2);
    app.add_option("--loop-fields", run_args.loop_fields, "Fields compared by the loop check, or all");
    app.add_flag("--valid-packets", run_args.valid_packets, "Synthesize non-zero addresses and ports");
    app.add_flag("--lazy", run_args.lazy, "Check feasibility only at forwarding points");
    app.add_option("--budget", run_args.budget, "Maximum number of paths");
    app.add_option("--out", run_args.out, "Report file (default stdout)");
    app.add_flag("--timing", run_args.timing, "Include solver wall time in the statistics");

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic MAC table or FIB");
    gen_cmd->add_option("kind", gen_args.kind, "mac-table | fib")->required();
    gen_cmd->add_option("--size", gen_args.size, "Number of entries");
    gen_cmd->add_option("--seed", gen_args.seed, "Random seed");
    gen_cmd->add_option("--ports", gen_args.ports, "Number of output ports");
    gen_cmd->add_option("--out", gen_args.out, "Output file (default stdout)");

    std::string smt_file;
    auto* smt_cmd = app.add_subcommand("smt-solve", "Answer an SMT-LIB QF_BV query with the internal solver");
    smt_cmd->add_option("file", smt_file)->required();

    std::string fmt_file;
    auto* fmt_cmd = app.add_subcommand("fmt", "Pretty-print a SEFL file or topology JSON");
    fmt_cmd->add_option("file", fmt_file)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kClean : kInputError;
    }

    try {
        if (*gen_cmd)
            return gen(gen_args);
        if (*smt_cmd)
            return smt_solve(smt_file);
        if (*fmt_cmd)
            return fmt(fmt_file);
        if (run_args.topology.empty() || run_args.inject.empty()) {
            std::cerr << "error: --topology and --inject are required\n" << app.help();
            return kInputError;
        }
        return run(run_args);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const QueryError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
    }
    return kInputError;
}
