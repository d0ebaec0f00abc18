#pragma once

#include "symnet/engine.hpp"
#include "symnet/path_state.hpp"
#include "symnet/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symnet {

/// Raised for queries about fields or positions a path does not have.
class QueryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "B.out0", "B.out[0]", "B.in1" -> canonical "B.out[0]" form.
std::string canonical_port(const std::string& text);

struct VariableReport {
    std::string name;
    std::string value;
    unsigned width = 0;
    ValueId id = 0;
    std::vector<std::string> constraints;
};

enum class Visibility { SourceVisible, Masked, Rewritten };
std::string_view to_string(Visibility v);

/// Invariance at the path end and visibility at the last visit for one field.
struct FieldVerdict {
    std::string field;
    bool invariant = false;
    std::string modified_at;
    Visibility visibility = Visibility::Rewritten;
    /// Set instead of the verdicts when the field is absent at an endpoint.
    std::string error;
};

struct PathReport {
    std::uint64_t id = 0;
    PathStatus status = PathStatus::Live;
    std::string reason;
    std::vector<std::string> ports;
    std::vector<std::string> instructions;
    std::vector<VariableReport> variables;
    std::vector<std::string> constraints;
    std::optional<std::map<std::string, std::uint64_t>> witness;
    std::vector<FieldVerdict> fields;
};

/// Renders a formula with symbols named after the entry fields they denote.
std::string render(const Formula& f, const std::map<SymbolId, std::string>& names);
/// Symbol -> entry field name for the fields that hold a bare symbol at injection.
std::map<SymbolId, std::string> entry_symbol_names(const PathState& path);

PathReport make_report(const TerminatedPath& path, const ShorthandTable& table = ShorthandTable::builtin());

/// Reports for the paths whose trace visits `port`.
std::vector<PathReport> reachability(const ExecutionResult& result, const std::string& port,
                                     const ShorthandTable& table = ShorthandTable::builtin());

struct InvarianceVerdict {
    bool invariant = false;
    /// First location (instruction trace form) that wrote the field after entry.
    std::string modified_at;
};

/// Value-id equality between the field at injection and at the end of the path.
InvarianceVerdict check_invariant(const PathState& path, const std::string& field,
                                  const ShorthandTable& table = ShorthandTable::builtin());

/// Classifies the field at visit `position` (index into the port trace)
/// against its value at injection. Masked: the value is still held by some
/// header frame but not live under the field's name. Metadata copies do not count.
Visibility check_visibility(const PathState& path, const std::string& field, std::size_t position);

/// Verdicts for each requested field; absent fields carry an error instead.
std::vector<FieldVerdict> field_verdicts(const PathState& path, const std::vector<std::string>& fields,
                                         const ShorthandTable& table = ShorthandTable::builtin());

struct LoopReport {
    std::uint64_t path = 0;
    std::string port;
    FieldSelector selector;
    std::shared_ptr<const Snapshot> old_state;
    std::shared_ptr<const Snapshot> new_state;
    std::vector<std::string> trace;
};

/// One report per path that ended in a loop; each pair is re-verified with
/// check_loop (a failed re-check raises SolverError).
std::vector<LoopReport> detect_loops(const ExecutionResult& result, Solver& solver);

/// Runs the engine with the given selector and collects the loop reports.
std::vector<LoopReport> detect_loops(const NetworkGraph& net, const PortRef& entry, const Instr& init,
                                     const FieldSelector& selector, Solver& solver, EngineOptions options = {});

struct Witness {
    std::uint64_t path = 0;
    std::map<std::string, std::uint64_t> fields; // entry fields
    Assignment model;
};

/// Non-zero addresses and ports, distinct source and destination addresses.
SynthesisProfile valid_packet_profile(const PathState& path);

/// One witness per delivered or failed path; each is checked by direct
/// evaluation of the path constraints (a failed check raises SolverError).
std::vector<Witness> synth_test_packets(const ExecutionResult& result, Solver& solver, bool valid_packets = false);

/// Witness for a single path, or nullopt when its constraints are unsatisfiable.
std::optional<Witness> synth_test_packet(const TerminatedPath& path, Solver& solver, bool valid_packets = false);

} // namespace symnet
