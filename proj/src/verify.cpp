#include "symnet/verify.hpp"

#include "symnet/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace symnet {

std::string canonical_port(const std::string& text) {
    for (const char* dir : {".out", ".in"}) {
        const auto at = text.rfind(dir);
        if (at == std::string::npos || at == 0)
            continue;
        std::string rest = text.substr(at + std::string(dir).size());
        if (rest.size() >= 2 && rest.front() == '[' && rest.back() == ']')
            rest = rest.substr(1, rest.size() - 2);
        if (rest.empty() || !std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            continue;
        return text.substr(0, at) + dir + "[" + std::to_string(std::stoul(rest)) + "]";
    }
    throw QueryError("malformed port \"" + text + "\" (expected element.in[i] or element.out[i])");
}

// ---- reports ----

std::map<SymbolId, std::string> entry_symbol_names(const PathState& path) {
    std::map<SymbolId, std::string> out;
    if (path.visits().empty())
        return out;
    for (const auto& sv : path.visits().front().stacks)
        if (const auto s = sv.top.as_symbol())
            out.emplace(*s, sv.name);
    return out;
}

namespace {

std::string rename(const std::string& text, const std::map<SymbolId, std::string>& names) {
    std::string out;
    out.reserve(text.size());
    const auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == 's' && (i == 0 || !word(text[i - 1])) && i + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            std::size_t j = i + 1;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
                ++j;
            if (j == text.size() || !word(text[j])) {
                const SymbolId id = std::stoull(text.substr(i + 1, j - i - 1));
                auto it = names.find(id);
                out += it == names.end() ? text.substr(i, j - i) : it->second;
                i = j;
                continue;
            }
        }
        out += text[i++];
    }
    return out;
}

bool mentions(const Formula& f, const std::set<SymbolId>& symbols) {
    for (SymbolId s : f.symbols())
        if (symbols.count(s))
            return true;
    return false;
}

} // namespace

std::string render(const Formula& f, const std::map<SymbolId, std::string>& names) {
    return rename(f.to_string(), names);
}

PathReport make_report(const TerminatedPath& t, const ShorthandTable& table) {
    const PathState& p = t.state;
    PathReport r;
    r.id = p.id;
    r.status = p.status;
    r.reason = p.reason;
    r.ports = p.port_trace();
    r.instructions = p.instructions();
    const auto names = entry_symbol_names(p);
    for (const auto& c : p.clauses())
        r.constraints.push_back(render(c.formula, names));
    const auto add = [&](std::string name, const Frame& f) {
        VariableReport v;
        v.name = std::move(name);
        v.value = rename(f.value.term.to_string(), names);
        v.width = f.size;
        v.id = f.value.id;
        std::vector<SymbolId> syms;
        f.value.term.collect_symbols(syms);
        const std::set<SymbolId> set(syms.begin(), syms.end());
        if (!set.empty())
            for (const auto& c : p.clauses())
                if (mentions(c.formula, set))
                    v.constraints.push_back(render(c.formula, names));
        r.variables.push_back(std::move(v));
    };
    for (const auto& [off, stack] : p.headers())
        add(p.name_of({false, off, {}}, table), stack.back());
    for (const auto& [key, stack] : p.metadata())
        add(key, stack.back());
    return r;
}

std::vector<PathReport> reachability(const ExecutionResult& result, const std::string& port,
                                     const ShorthandTable& table) {
    const std::string want = canonical_port(port);
    std::vector<PathReport> out;
    for (const auto& t : result.paths) {
        const auto trace = t.state.port_trace();
        if (std::find(trace.begin(), trace.end(), want) != trace.end())
            out.push_back(make_report(t, table));
    }
    return out;
}

// ---- invariance and visibility ----

namespace {

const StackView* named(const PortVisit& v, const std::string& field) {
    for (const auto& sv : v.stacks)
        if (sv.name == field)
            return &sv;
    return nullptr;
}

const StackView& source_view(const PathState& path, const std::string& field) {
    if (path.visits().empty())
        throw QueryError("path has no port visits");
    const StackView* sv = named(path.visits().front(), field);
    if (!sv)
        throw QueryError("field " + field + " is not allocated at the injection port");
    return *sv;
}

bool after_entry(const HistoryRecord& r) { return r.location.rfind("init", 0) != 0; }

} // namespace

InvarianceVerdict check_invariant(const PathState& path, const std::string& field, const ShorthandTable& table) {
    const StackView& src = source_view(path, field);
    const auto var = path.resolve(field, table);
    const Frame* end = var ? path.live(*var) : nullptr;
    if (!end)
        throw QueryError("field " + field + " is not allocated at the end of the path");
    InvarianceVerdict v;
    v.invariant = end->value.id == src.frames.back();
    if (!v.invariant) {
        for (const auto& r : path.history()) {
            if (after_entry(r) && (r.variable == *var || r.variable == src.variable)) {
                v.modified_at = r.location;
                break;
            }
        }
    }
    return v;
}

std::string_view to_string(Visibility v) {
    switch (v) {
    case Visibility::SourceVisible: return "source-visible";
    case Visibility::Masked: return "masked";
    case Visibility::Rewritten: return "rewritten";
    }
    return "?";
}

Visibility check_visibility(const PathState& path, const std::string& field, std::size_t position) {
    const StackView& src = source_view(path, field);
    if (position >= path.visits().size())
        throw QueryError("trace position " + std::to_string(position) + " beyond " +
                         std::to_string(path.visits().size()) + " visits");
    const ValueId id = src.frames.back();
    const PortVisit& at = path.visits()[position];
    if (const StackView* sv = named(at, field); sv && sv->frames.back() == id)
        return Visibility::SourceVisible;
    for (const auto& sv : at.stacks)
        if (!sv.variable.is_meta && std::find(sv.frames.begin(), sv.frames.end(), id) != sv.frames.end())
            return Visibility::Masked;
    return Visibility::Rewritten;
}

std::vector<FieldVerdict> field_verdicts(const PathState& path, const std::vector<std::string>& fields,
                                         const ShorthandTable& table) {
    std::vector<FieldVerdict> out;
    for (const auto& f : fields) {
        FieldVerdict v;
        v.field = f;
        try {
            const auto inv = check_invariant(path, f, table);
            v.invariant = inv.invariant;
            v.modified_at = inv.modified_at;
            v.visibility = check_visibility(path, f, path.visits().size() - 1);
        } catch (const QueryError& e) {
            v.error = e.what();
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ---- loops ----

std::vector<LoopReport> detect_loops(const ExecutionResult& result, Solver& solver) {
    std::vector<LoopReport> out;
    for (const auto& t : result.paths) {
        if (!t.loop)
            continue;
        const auto [o, n] = align(*t.loop->old_state, *t.loop->new_state);
        if (!check_loop(solver, o, n).loop)
            throw SolverError("loop evidence at " + t.loop->port + " does not re-verify");
        out.push_back({t.state.id, t.loop->port, result.loop_selector, t.loop->old_state, t.loop->new_state,
                       t.loop->new_state->trace});
    }
    return out;
}

std::vector<LoopReport> detect_loops(const NetworkGraph& net, const PortRef& entry, const Instr& init,
                                     const FieldSelector& selector, Solver& solver, EngineOptions options) {
    options.loop_detection = true;
    options.loop_selector = selector;
    Engine engine(net, solver, options);
    return detect_loops(engine.inject(entry, init), solver);
}

// ---- witnesses ----

SynthesisProfile valid_packet_profile(const PathState& path) {
    SynthesisProfile profile;
    if (path.visits().empty())
        return profile;
    const auto& entry = path.visits().front();
    for (const char* f : {"IpSrc", "IpDst", "TcpSrc", "TcpDst", "UdpSrc", "UdpDst"})
        if (const StackView* sv = named(entry, f))
            profile.preferred.push_back(
                Formula::cmp(CmpOp::Ne, sv->top, LinearTerm::constant(sv->top.width(), 0)));
    const StackView* src = named(entry, "IpSrc");
    const StackView* dst = named(entry, "IpDst");
    if (src && dst)
        profile.preferred.push_back(Formula::cmp(CmpOp::Ne, src->top, dst->top));
    return profile;
}

std::optional<Witness> synth_test_packet(const TerminatedPath& t, Solver& solver, bool valid_packets) {
    const PathState& p = t.state;
    const auto formulas = p.formulas();
    if (!solver.check(formulas).sat)
        return std::nullopt;
    Witness w;
    w.path = p.id;
    w.model = synthesize_model(solver, formulas, valid_packets ? valid_packet_profile(p) : SynthesisProfile{});
    for (const auto& f : formulas)
        if (!f.evaluate(w.model))
            throw SolverError("witness for path " + std::to_string(p.id) + " violates " + f.to_string());
    if (!p.visits().empty())
        for (const auto& sv : p.visits().front().stacks)
            w.fields.emplace(sv.name, sv.top.evaluate(w.model));
    return w;
}

std::vector<Witness> synth_test_packets(const ExecutionResult& result, Solver& solver, bool valid_packets) {
    std::vector<Witness> out;
    for (const auto& t : result.paths) {
        if (t.state.status == PathStatus::Dropped)
            continue;
        if (auto w = synth_test_packet(t, solver, valid_packets))
            out.push_back(std::move(*w));
    }
    return out;
}

} // namespace symnet
