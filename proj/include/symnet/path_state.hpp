#pragma once

#include "symnet/formula.hpp"
#include "symnet/sefl.hpp"
#include "symnet/solver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symnet {

inline constexpr unsigned kDefaultMetaWidth = 64;

struct Frame {
    Value value;
    unsigned size = 0;
    friend bool operator==(const Frame&, const Frame&) = default;
};

using ValueStack = std::vector<Frame>;

enum class PathStatus { Live, Delivered, Failed, Dropped, Loop };
std::string_view to_string(PathStatus s);

struct Location {
    std::string element;
    unsigned port = 0;
    bool output = false;
    std::string to_string() const;
    friend bool operator==(const Location&, const Location&) = default;
};

struct Clause {
    Formula formula;
    std::string location;
};

/// Names a header stack (absolute bit offset) or a metadata stack (resolved key).
struct Variable {
    bool is_meta = false;
    std::int64_t offset = 0;
    std::string key;
    friend auto operator<=>(const Variable&, const Variable&) = default;
};

enum class HistoryKind { Allocate, Assign, Deallocate };

struct HistoryRecord {
    Variable variable;
    HistoryKind kind;
    Value value;
    std::size_t depth; // stack depth after the operation
    std::string location;
    std::string port;
};

/// Stack contents seen when a path enters a port; used for visibility queries.
struct StackView {
    Variable variable;
    std::string name;
    std::vector<ValueId> frames; // bottom to top
    LinearTerm top;
};

struct PortVisit {
    std::string port;
    std::vector<StackView> stacks;
};

/// Live terms of selected fields plus the full constraint store.
struct Snapshot {
    std::string port;
    std::vector<std::string> names;
    std::vector<std::optional<LinearTerm>> terms;
    std::vector<Formula> constraints;
    std::vector<std::string> trace; // ports visited up to here
};

struct FieldSelector {
    bool all = false;
    std::vector<std::string> fields;

    static FieldSelector every() { return {true, {}}; }
    static FieldSelector of(std::vector<std::string> names) { return {false, std::move(names)}; }
    std::string to_string() const;
};

/// One execution path: one packet with its full lineage.
class PathState {
public:
    PathState();

    // identity and position
    std::uint64_t id = 0;
    Location location;
    PathStatus status = PathStatus::Live;
    std::string reason;
    /// Clause count at the last satisfiable feasibility check.
    std::size_t checked_clauses = 0;

    // headers
    const std::map<std::int64_t, ValueStack>& headers() const noexcept { return headers_; }
    void allocate_header(std::int64_t offset, unsigned size, Value v, const std::string& where);
    void deallocate_header(std::int64_t offset, std::optional<unsigned> size, const std::string& where);
    /// Exact region match: a width, when given, must equal the allocation.
    const Frame& header(std::int64_t offset, std::optional<unsigned> width = std::nullopt) const;
    void write_header(std::int64_t offset, Value v, const std::string& where);

    // metadata
    const std::map<std::string, ValueStack>& metadata() const noexcept { return metadata_; }
    /// The stored key: local scope prefixes the current element id.
    std::string meta_key(const std::string& key, Scope scope) const;
    /// Local binding first, then global; nullopt when neither exists.
    std::optional<std::string> find_meta(const std::string& key) const;
    void allocate_meta(const std::string& key, Scope scope, unsigned size, Value v, const std::string& where);
    void deallocate_meta(const std::string& key, std::optional<unsigned> size, const std::string& where);
    const Frame& meta(const std::string& key) const;
    void write_meta(const std::string& key, Value v, const std::string& where);

    // tags
    const std::map<std::string, std::int64_t>& tags() const noexcept { return tags_; }
    std::int64_t tag(const std::string& name) const;
    bool has_tag(const std::string& name) const { return tags_.count(name) != 0; }
    void set_tag(const std::string& name, std::int64_t value) { tags_[name] = value; }
    void destroy_tag(const std::string& name);

    // constraints
    const std::vector<Clause>& clauses() const noexcept { return clauses_; }
    std::vector<Formula> formulas() const;
    void add_clause(Formula f, std::string where) { clauses_.push_back({std::move(f), std::move(where)}); }

    // lineage
    const std::vector<HistoryRecord>& history() const noexcept { return history_; }
    const std::vector<PortVisit>& visits() const noexcept { return visits_; }
    const std::vector<std::string>& instructions() const noexcept { return instructions_; }
    void record_instruction(std::string where) { instructions_.push_back(std::move(where)); }
    std::vector<std::string> port_trace() const;
    void enter(Location loc, const ShorthandTable& table);

    /// Earlier snapshots of this lineage, oldest first.
    std::vector<std::shared_ptr<const Snapshot>> snapshots_at(const std::string& port) const;
    void push_snapshot(std::shared_ptr<const Snapshot> s);

    /// Display name for a variable under the current tags (shorthand or "@offset" from Start).
    std::string name_of(const Variable& v, const ShorthandTable& table) const;
    /// Resolves a field name: shorthand header under the current tags, otherwise metadata.
    std::optional<Variable> resolve(const std::string& name, const ShorthandTable& table) const;
    const Frame* live(const Variable& v) const;

private:
    void record(const Variable& var, HistoryKind kind, const Value& v, std::size_t depth, const std::string& where);

    std::map<std::int64_t, ValueStack> headers_;
    std::map<std::string, ValueStack> metadata_;
    std::map<std::string, std::int64_t> tags_;
    std::vector<Clause> clauses_;
    std::vector<HistoryRecord> history_;
    std::vector<PortVisit> visits_;
    std::vector<std::string> instructions_;

    struct SnapNode {
        std::shared_ptr<const Snapshot> snapshot;
        std::shared_ptr<const SnapNode> parent;
    };
    std::shared_ptr<const SnapNode> snapshots_;
};

/// Forked copy: independent state, shared immutable snapshots.
inline PathState fork_path(const PathState& p) { return p; }

Snapshot snapshot(const PathState& path, const FieldSelector& selector, const ShorthandTable& table,
                  std::string port);

/// Aligns two snapshots by field name (absent where a side lacks the field).
std::pair<LoopSide, LoopSide> align(const Snapshot& o, const Snapshot& n);

// ---- expression evaluation ----

/// Concrete signed integer for an address or tag expression.
std::int64_t eval_address(const Expr& e, const PathState& path);

/// Width an expression carries on its own (from referenced allocations).
std::optional<unsigned> intrinsic_width(const Expr& e, const PathState& path);

/// Evaluates to a width-tagged value. Direct header/metadata references keep
/// the referenced value id; anything else mints a new id.
Value eval_expr(const Expr& e, const PathState& path, IdSource& ids, std::optional<unsigned> width = std::nullopt);

Formula eval_cond(const Cond& c, const PathState& path, IdSource& ids);

/// Fresh unconstrained symbolic value whose value id equals its symbol id.
Value fresh_value(IdSource& ids, unsigned width);

} // namespace symnet
