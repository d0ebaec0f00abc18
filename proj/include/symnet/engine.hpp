#pragma once

#include "symnet/path_state.hpp"
#include "symnet/sefl.hpp"
#include "symnet/solver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symnet {

/// A box: numbered ports, each optionally bound to one instruction.
struct ElementModel {
    std::string id;
    std::string kind;
    unsigned inputs = 1;
    unsigned outputs = 1;
    std::map<unsigned, Instr> input_code;
    std::optional<Instr> any_input; // InputPort(*)
    std::map<unsigned, Instr> output_code;

    const Instr* input(unsigned port) const;
    const Instr* output(unsigned port) const;
    /// Throws ModelError when code references a port the element lacks.
    void validate() const;
};

/// Builds an element from surface-syntax sections.
ElementModel make_element(std::string id, std::string kind, const ElementCode& code, unsigned inputs = 0,
                          unsigned outputs = 0);

struct PortRef {
    std::string element;
    unsigned port = 0;
    friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

class NetworkGraph {
public:
    void add(ElementModel element);
    void link(const PortRef& from_output, const PortRef& to_input);

    const ElementModel& element(const std::string& id) const;
    bool has(const std::string& id) const { return elements_.count(id) != 0; }
    const std::map<std::string, ElementModel>& elements() const noexcept { return elements_; }
    const std::map<PortRef, PortRef>& links() const noexcept { return links_; }
    std::optional<PortRef> next(const PortRef& output) const;

    /// Throws ModelError for dangling references or bad element code.
    void validate() const;

private:
    std::map<std::string, ElementModel> elements_;
    std::map<PortRef, PortRef> links_;
};

struct EngineOptions {
    bool lazy = false;
    bool depth_first = true;
    bool loop_detection = true;
    bool snapshot_outputs = false;
    FieldSelector loop_selector = FieldSelector::of({"IpSrc", "IpDst"});
    std::uint64_t path_budget = 1000000;
    const ShorthandTable* table = &ShorthandTable::builtin();
};

struct EngineStats {
    std::uint64_t paths = 0;
    std::uint64_t solver_calls = 0;
    double solver_millis = 0.0;
    std::uint64_t ports_visited = 0;
};

/// Loop evidence attached to a path that ended with PathStatus::Loop.
struct LoopEvidence {
    std::string port;
    std::shared_ptr<const Snapshot> old_state;
    std::shared_ptr<const Snapshot> new_state;
};

struct TerminatedPath {
    PathState state;
    std::optional<LoopEvidence> loop;
};

struct ExecutionResult {
    std::vector<TerminatedPath> paths;
    EngineStats stats;
    FieldSelector loop_selector;
    PortRef entry;

    std::size_t count(PathStatus s) const;
};

struct StepResult {
    PathState path;
    std::optional<unsigned> emitted; // output port
};

class Engine {
public:
    Engine(const NetworkGraph& net, Solver& solver, EngineOptions options = {});

    ExecutionResult inject(const PortRef& entry, const Instr& init);

    /// Runs one instruction on a live path. Terminated successors carry a
    /// non-live status; live ones may carry an emission port.
    std::vector<StepResult> step(const Instr& instr, PathState path, const std::string& where = "step");

    IdSource& ids() noexcept { return ids_; }

private:
    struct Sink;
    void exec(const Instr& in, PathState path, const std::string& where, std::size_t ordinal, Sink& sink);
    void exec_seq(const std::vector<Instr>& items, std::size_t from, PathState path, const std::string& where,
                  std::size_t ordinal, Sink& sink);
    bool feasible(PathState& path);
    void constrain(PathState& path, Formula f, const std::string& where, Sink& sink, bool check);

    const NetworkGraph& net_;
    Solver& solver_;
    EngineOptions options_;
    IdSource ids_;
    EngineStats stats_;
};

} // namespace symnet
