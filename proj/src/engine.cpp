#include "symnet/engine.hpp"

#include "symnet/error.hpp"

#include <algorithm>
#include <deque>
#include <regex>
#include <set>

namespace symnet {

// ---- elements and graph ----

const Instr* ElementModel::input(unsigned port) const {
    auto it = input_code.find(port);
    if (it != input_code.end())
        return &it->second;
    return any_input ? &*any_input : nullptr;
}

const Instr* ElementModel::output(unsigned port) const {
    auto it = output_code.find(port);
    return it == output_code.end() ? nullptr : &it->second;
}

namespace {

void check_ports(const Instr& in, const ElementModel& e) {
    if (in.kind() == Instr::Kind::Forward || in.kind() == Instr::Kind::Fork)
        for (unsigned p : in.ports())
            if (p >= e.outputs)
                throw ModelError(e.id + ": output port " + std::to_string(p) + " does not exist (" +
                                 std::to_string(e.outputs) + " outputs)");
    for (const auto& c : in.children())
        check_ports(c, e);
}

} // namespace

void ElementModel::validate() const {
    for (const auto& [p, code] : input_code) {
        if (p >= inputs)
            throw ModelError(id + ": input port " + std::to_string(p) + " does not exist");
        check_ports(code, *this);
    }
    if (any_input)
        check_ports(*any_input, *this);
    for (const auto& [p, code] : output_code) {
        if (p >= outputs)
            throw ModelError(id + ": output port " + std::to_string(p) + " does not exist");
        check_ports(code, *this);
    }
}

namespace {

unsigned max_forward(const Instr& in) {
    unsigned m = 0;
    if (in.kind() == Instr::Kind::Forward || in.kind() == Instr::Kind::Fork)
        for (unsigned p : in.ports())
            m = std::max(m, p + 1);
    for (const auto& c : in.children())
        m = std::max(m, max_forward(c));
    return m;
}

} // namespace

ElementModel make_element(std::string id, std::string kind, const ElementCode& code, unsigned inputs,
                          unsigned outputs) {
    ElementModel e;
    e.id = std::move(id);
    e.kind = std::move(kind);
    unsigned in_count = 1, out_count = 1;
    for (const auto& [p, body] : code.inputs) {
        if (p)
            e.input_code.emplace(*p, body);
        else
            e.any_input = body;
        if (p)
            in_count = std::max(in_count, *p + 1);
        out_count = std::max(out_count, max_forward(body));
    }
    for (const auto& [p, body] : code.outputs) {
        e.output_code.emplace(p, body);
        out_count = std::max(out_count, p + 1);
    }
    e.inputs = inputs ? inputs : in_count;
    e.outputs = outputs ? outputs : out_count;
    e.validate();
    return e;
}

void NetworkGraph::add(ElementModel element) {
    element.validate();
    const std::string id = element.id;
    if (elements_.count(id))
        throw ModelError("duplicate element id " + id);
    elements_.emplace(id, std::move(element));
}

void NetworkGraph::link(const PortRef& from, const PortRef& to) {
    const auto& a = element(from.element);
    const auto& b = element(to.element);
    if (from.port >= a.outputs)
        throw ModelError(from.element + ".out[" + std::to_string(from.port) + "] does not exist");
    if (to.port >= b.inputs)
        throw ModelError(to.element + ".in[" + std::to_string(to.port) + "] does not exist");
    if (!links_.emplace(from, to).second)
        throw ModelError(from.element + ".out[" + std::to_string(from.port) + "] already has a link");
}

const ElementModel& NetworkGraph::element(const std::string& id) const {
    auto it = elements_.find(id);
    if (it == elements_.end())
        throw ModelError("unknown element " + id);
    return it->second;
}

std::optional<PortRef> NetworkGraph::next(const PortRef& output) const {
    auto it = links_.find(output);
    if (it == links_.end())
        return std::nullopt;
    return it->second;
}

void NetworkGraph::validate() const {
    for (const auto& [id, e] : elements_)
        e.validate();
    for (const auto& [from, to] : links_) {
        if (!has(from.element) || element(from.element).outputs <= from.port)
            throw ModelError("dangling link source " + from.element);
        if (!has(to.element) || element(to.element).inputs <= to.port)
            throw ModelError("dangling link target " + to.element);
    }
}

std::size_t ExecutionResult::count(PathStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(paths.begin(), paths.end(), [s](const TerminatedPath& p) { return p.state.status == s; }));
}

// ---- execution ----

struct Engine::Sink {
    std::vector<StepResult> out;
};

Engine::Engine(const NetworkGraph& net, Solver& solver, EngineOptions options)
    : net_(net)
    , solver_(solver)
    , options_(std::move(options)) {}

bool Engine::feasible(PathState& path) {
    if (path.checked_clauses == path.clauses().size())
        return true;
    const double before = solver_.stats().millis;
    ++stats_.solver_calls;
    const auto f = path.formulas();
    const bool sat = solver_.check(f).sat;
    stats_.solver_millis += solver_.stats().millis - before;
    if (sat)
        path.checked_clauses = path.clauses().size();
    return sat;
}

namespace {

void terminate(PathState& p, PathStatus s, std::string reason) {
    p.status = s;
    p.reason = std::move(reason);
}

std::string kind_name(Instr::Kind k) {
    switch (k) {
    case Instr::Kind::Allocate: return "Allocate";
    case Instr::Kind::Deallocate: return "Deallocate";
    case Instr::Kind::Assign: return "Assign";
    case Instr::Kind::CreateTag: return "CreateTag";
    case Instr::Kind::DestroyTag: return "DestroyTag";
    case Instr::Kind::Constrain: return "Constrain";
    case Instr::Kind::Fail: return "Fail";
    case Instr::Kind::If: return "If";
    case Instr::Kind::For: return "For";
    case Instr::Kind::Forward: return "Forward";
    case Instr::Kind::Fork: return "Fork";
    case Instr::Kind::Block: return "InstructionBlock";
    case Instr::Kind::NoOp: return "NoOp";
    }
    return "?";
}

} // namespace

void Engine::constrain(PathState& path, Formula f, const std::string& where, Sink& sink, bool check) {
    const auto k = f.constant_value();
    if (k == true) {
        sink.out.push_back({std::move(path), std::nullopt});
        return;
    }
    path.add_clause(std::move(f), where);
    if (k == false) {
        terminate(path, PathStatus::Dropped, "unsatisfiable constraint at " + where);
        sink.out.push_back({std::move(path), std::nullopt});
        return;
    }
    if (check && !options_.lazy && !feasible(path)) {
        terminate(path, PathStatus::Dropped, "unsatisfiable constraint at " + where);
        sink.out.push_back({std::move(path), std::nullopt});
        return;
    }
    sink.out.push_back({std::move(path), std::nullopt});
}

void Engine::exec(const Instr& in, PathState path, const std::string& where, std::size_t ordinal, Sink& sink) {
    const std::string loc = where + "#" + std::to_string(ordinal);
    if (in.kind() != Instr::Kind::Block)
        path.record_instruction(loc + ":" + kind_name(in.kind()));
    try {
        switch (in.kind()) {
        case Instr::Kind::NoOp: sink.out.push_back({std::move(path), std::nullopt}); return;
        case Instr::Kind::Allocate: {
            const auto& t = in.target();
            if (t.is_meta) {
                const unsigned w = in.size().value_or(kDefaultMetaWidth);
                path.allocate_meta(t.key, in.scope(), w, fresh_value(ids_, w), loc);
            } else {
                const std::int64_t off = eval_address(*t.address, path);
                const auto size = in.size() ? in.size() : t.width;
                if (!size)
                    throw PathError(ErrorKind::SizeMismatch, "header allocation needs a size");
                path.allocate_header(off, *size, fresh_value(ids_, *size), loc);
            }
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        }
        case Instr::Kind::Deallocate: {
            const auto& t = in.target();
            if (t.is_meta)
                path.deallocate_meta(t.key, in.size(), loc);
            else
                path.deallocate_header(eval_address(*t.address, path), in.size() ? in.size() : t.width, loc);
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        }
        case Instr::Kind::Assign: {
            const auto& t = in.target();
            if (t.is_meta) {
                const unsigned w = path.meta(t.key).size;
                path.write_meta(t.key, eval_expr(in.expr(), path, ids_, w), loc);
            } else {
                const std::int64_t off = eval_address(*t.address, path);
                const unsigned w = path.header(off, t.width).size;
                path.write_header(off, eval_expr(in.expr(), path, ids_, w), loc);
            }
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        }
        case Instr::Kind::CreateTag:
            path.set_tag(in.name(), eval_address(in.expr(), path));
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        case Instr::Kind::DestroyTag:
            path.destroy_tag(in.name());
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        case Instr::Kind::Constrain: {
            const Cond c = in.has_target() ? in.cond().fill(in.target().as_expr()) : in.cond();
            Formula f = eval_cond(c, path, ids_);
            constrain(path, std::move(f), loc, sink, true);
            return;
        }
        case Instr::Kind::Fail:
            terminate(path, PathStatus::Failed, in.name());
            sink.out.push_back({std::move(path), std::nullopt});
            return;
        case Instr::Kind::If: {
            const Formula f = eval_cond(in.cond(), path, ids_);
            const std::size_t then_ord = ordinal + 1;
            const std::size_t else_ord = then_ord + in.children()[0].subtree_size();
            if (const auto k = f.constant_value()) {
                if (*k)
                    exec(in.children()[0], std::move(path), where, then_ord, sink);
                else
                    exec(in.children()[1], std::move(path), where, else_ord, sink);
                return;
            }
            PathState other = fork_path(path);
            if (++stats_.paths > options_.path_budget)
                throw ModelError("path budget of " + std::to_string(options_.path_budget) + " exceeded");
            Sink a, b;
            constrain(path, f, loc, a, true);
            constrain(other, Formula::simplified_not(f), loc, b, true);
            for (auto& r : a.out) {
                if (r.path.status == PathStatus::Live)
                    exec(in.children()[0], std::move(r.path), where, then_ord, sink);
                else
                    sink.out.push_back(std::move(r));
            }
            for (auto& r : b.out) {
                if (r.path.status == PathStatus::Live)
                    exec(in.children()[1], std::move(r.path), where, else_ord, sink);
                else
                    sink.out.push_back(std::move(r));
            }
            return;
        }
        case Instr::Kind::For: {
            std::regex re;
            try {
                re = std::regex(in.pattern(), std::regex::ECMAScript);
            } catch (const std::regex_error&) {
                throw ModelError("bad For pattern \"" + in.pattern() + "\"");
            }
            const std::string prefix = path.location.element + "/";
            std::set<std::string> keys;
            for (const auto& [key, stack] : path.metadata()) {
                std::string visible = key;
                if (key.compare(0, prefix.size(), prefix) == 0)
                    visible = key.substr(prefix.size());
                else if (key.find('/') != std::string::npos)
                    continue;
                if (std::regex_match(visible, re))
                    keys.insert(visible);
            }
            std::vector<Instr> unrolled;
            for (const auto& k : keys)
                unrolled.push_back(substitute_binder(in.children()[0], in.name(), k));
            std::vector<StepResult> current;
            current.push_back({std::move(path), std::nullopt});
            for (const auto& body : unrolled) {
                std::vector<StepResult> next;
                for (auto& r : current) {
                    if (r.path.status != PathStatus::Live || r.emitted) {
                        sink.out.push_back(std::move(r));
                        continue;
                    }
                    Sink s;
                    exec(body, std::move(r.path), where, ordinal + 1, s);
                    for (auto& x : s.out)
                        next.push_back(std::move(x));
                }
                current = std::move(next);
            }
            for (auto& r : current)
                sink.out.push_back(std::move(r));
            return;
        }
        case Instr::Kind::Forward:
            if (options_.lazy && !feasible(path)) {
                terminate(path, PathStatus::Dropped, "unsatisfiable constraints at " + loc);
                sink.out.push_back({std::move(path), std::nullopt});
                return;
            }
            sink.out.push_back({std::move(path), in.ports()[0]});
            return;
        case Instr::Kind::Fork: {
            if (options_.lazy && !feasible(path)) {
                terminate(path, PathStatus::Dropped, "unsatisfiable constraints at " + loc);
                sink.out.push_back({std::move(path), std::nullopt});
                return;
            }
            for (std::size_t i = 0; i < in.ports().size(); ++i) {
                if (i > 0 && ++stats_.paths > options_.path_budget)
                    throw ModelError("path budget of " + std::to_string(options_.path_budget) + " exceeded");
                if (i + 1 == in.ports().size())
                    sink.out.push_back({std::move(path), in.ports()[i]});
                else
                    sink.out.push_back({fork_path(path), in.ports()[i]});
            }
            if (in.ports().empty()) {
                terminate(path, PathStatus::Failed, "Fork without ports");
                sink.out.push_back({std::move(path), std::nullopt});
            }
            return;
        }
        case Instr::Kind::Block: exec_seq(in.children(), 0, std::move(path), where, ordinal + 1, sink); return;
        }
    } catch (const PathError& e) {
        terminate(path, PathStatus::Failed, e.what());
        sink.out.push_back({std::move(path), std::nullopt});
    }
}

void Engine::exec_seq(const std::vector<Instr>& items, std::size_t from, PathState path, const std::string& where,
                      std::size_t ordinal, Sink& sink) {
    if (from == items.size()) {
        sink.out.push_back({std::move(path), std::nullopt});
        return;
    }
    Sink local;
    exec(items[from], std::move(path), where, ordinal, local);
    const std::size_t next = ordinal + items[from].subtree_size();
    for (auto& r : local.out) {
        if (r.path.status != PathStatus::Live || r.emitted)
            sink.out.push_back(std::move(r));
        else
            exec_seq(items, from + 1, std::move(r.path), where, next, sink);
    }
}

std::vector<StepResult> Engine::step(const Instr& instr, PathState path, const std::string& where) {
    Sink sink;
    exec(instr, std::move(path), where, 0, sink);
    return std::move(sink.out);
}

ExecutionResult Engine::inject(const PortRef& entry, const Instr& init) {
    net_.validate();
    const auto& entry_el = net_.element(entry.element);
    if (entry.port >= entry_el.inputs)
        throw ModelError(entry.element + ".in[" + std::to_string(entry.port) + "] does not exist");

    stats_ = {};
    ExecutionResult result;
    result.loop_selector = options_.loop_selector;
    result.entry = entry;
    const ShorthandTable& table = *options_.table;

    struct Item {
        PathState path;
    };
    std::deque<Item> work;
    std::uint64_t next_id = 0;

    const auto finish = [&](PathState p, std::optional<LoopEvidence> loop = std::nullopt) {
        if (options_.lazy && (p.status == PathStatus::Delivered || p.status == PathStatus::Failed) &&
            !feasible(p)) {
            p.status = PathStatus::Dropped;
            p.reason = "unsatisfiable constraints";
        }
        p.id = next_id++;
        result.paths.push_back({std::move(p), std::move(loop)});
    };

    // Loop check on entry to a port; true when the path ends here.
    const auto loop_check = [&](PathState& p) -> std::optional<LoopEvidence> {
        const std::string port = p.location.to_string();
        auto snap = std::make_shared<const Snapshot>(snapshot(p, options_.loop_selector, table, port));
        for (const auto& old : p.snapshots_at(port)) {
            const auto [o, n] = align(*old, *snap);
            ++stats_.solver_calls;
            const double before = solver_.stats().millis;
            const bool loop = check_loop(solver_, o, n).loop;
            stats_.solver_millis += solver_.stats().millis - before;
            if (loop)
                return LoopEvidence{port, old, snap};
        }
        p.push_snapshot(std::move(snap));
        return std::nullopt;
    };

    {
        PathState p;
        p.location = {entry.element, entry.port, false};
        ++stats_.paths;
        Sink s;
        exec(init, std::move(p), "init", 0, s);
        for (auto& r : s.out) {
            if (r.path.status != PathStatus::Live) {
                finish(std::move(r.path));
            } else if (r.emitted) {
                terminate(r.path, PathStatus::Failed, "packet creation code forwarded");
                finish(std::move(r.path));
            } else {
                work.push_back({std::move(r.path)});
            }
        }
    }

    while (!work.empty()) {
        Item item = options_.depth_first ? std::move(work.back()) : std::move(work.front());
        if (options_.depth_first)
            work.pop_back();
        else
            work.pop_front();
        PathState path = std::move(item.path);
        const Location at{path.location.element, path.location.port, false};
        const auto& el = net_.element(at.element);
        path.enter(at, table);
        ++stats_.ports_visited;
        if (options_.loop_detection) {
            if (auto ev = loop_check(path)) {
                terminate(path, PathStatus::Loop, "loop at " + ev->port);
                finish(std::move(path), std::move(ev));
                continue;
            }
        }
        const Instr* code = el.input(at.port);
        if (!code) {
            terminate(path, PathStatus::Delivered, "no code at " + at.to_string());
            finish(std::move(path));
            continue;
        }
        Sink s;
        exec(*code, std::move(path), at.to_string(), 0, s);
        std::vector<StepResult> emitted;
        for (auto& r : s.out) {
            if (r.path.status != PathStatus::Live) {
                finish(std::move(r.path));
            } else if (!r.emitted) {
                terminate(r.path, PathStatus::Delivered, "consumed at " + at.to_string());
                finish(std::move(r.path));
            } else {
                emitted.push_back(std::move(r));
            }
        }
        for (auto& r : emitted) {
            PathState p = std::move(r.path);
            const Location out{at.element, *r.emitted, true};
            p.enter(out, table);
            ++stats_.ports_visited;
            if (options_.loop_detection && options_.snapshot_outputs) {
                if (auto ev = loop_check(p)) {
                    terminate(p, PathStatus::Loop, "loop at " + ev->port);
                    finish(std::move(p), std::move(ev));
                    continue;
                }
            }
            std::vector<PathState> leaving;
            if (const Instr* oc = el.output(out.port)) {
                Sink os;
                exec(*oc, std::move(p), out.to_string(), 0, os);
                for (auto& x : os.out) {
                    if (x.path.status != PathStatus::Live) {
                        finish(std::move(x.path));
                    } else if (x.emitted) {
                        terminate(x.path, PathStatus::Failed,
                                  std::string(to_string(ErrorKind::InvalidPort)) + ": forward from output code");
                        finish(std::move(x.path));
                    } else {
                        leaving.push_back(std::move(x.path));
                    }
                }
            } else {
                leaving.push_back(std::move(p));
            }
            for (auto& lp : leaving) {
                const auto dst = net_.next({out.element, out.port});
                if (!dst) {
                    terminate(lp, PathStatus::Delivered, "no outgoing link at " + out.to_string());
                    finish(std::move(lp));
                    continue;
                }
                lp.location = {dst->element, dst->port, false};
                work.push_back({std::move(lp)});
            }
        }
    }
    result.stats = stats_;
    result.stats.paths = result.paths.size();
    return result;
}

} // namespace symnet
