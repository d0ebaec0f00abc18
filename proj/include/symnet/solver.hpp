#pragma once

#include "symnet/formula.hpp"
#include "symnet/interval_set.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace symnet {

using WidthMap = std::map<SymbolId, unsigned>;

/// Collects the width of every symbol mentioned by the formulas.
WidthMap symbol_widths(std::span<const Formula> formulas);

struct SolveResult {
    bool sat = false;
    Assignment model; // meaningful only when sat
};

struct SolverStats {
    std::uint64_t calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t search_nodes = 0;
    double millis = 0.0;
};

/// Decision procedure for conjunctions of formulas over fixed-width unsigned
/// values. Every Sat answer is re-evaluated against the input before it is
/// returned; a model that fails the re-check raises SolverError.
class Solver {
public:
    virtual ~Solver() = default;

    SolveResult check(std::span<const Formula> conjunction);
    SolveResult check(std::initializer_list<Formula> conjunction) {
        return check(std::span<const Formula>(conjunction.begin(), conjunction.size()));
    }

    const SolverStats& stats() const noexcept { return stats_; }
    void reset_stats() noexcept { stats_ = {}; }

protected:
    virtual SolveResult solve(std::span<const Formula> conjunction, const WidthMap& widths) = 0;
    SolverStats stats_;
};

struct InternalSolverOptions {
    std::uint64_t node_budget = 200000;
    bool cache = true;
    std::size_t cache_limit = 200000;
    /// A component whose search exceeds the budget is enumerated when its
    /// domain holds at most this many points.
    std::uint64_t enumeration_limit = std::uint64_t{1} << 20;
};

/// Equalities with an odd coefficient are substituted away first, then
/// interval propagation with bisection search runs per independent component.
/// Complete over the fragment; small components fall back to enumeration
/// once the search budget is spent.
class InternalSolver : public Solver {
public:
    explicit InternalSolver(InternalSolverOptions options = {}) : options_(options) {}

protected:
    SolveResult solve(std::span<const Formula> conjunction, const WidthMap& widths) override;

private:
    SolveResult solve_split(std::span<const Formula> conjunction, const WidthMap& widths);
    SolveResult solve_component(std::span<const Formula> conjunction, const WidthMap& widths);
    SolveResult enumerate(std::span<const Formula> conjunction, const std::vector<SymbolId>& ids,
                          const std::vector<IntervalSet>& doms);

    InternalSolverOptions options_;
    std::mutex cache_mutex_;
    std::unordered_map<std::string, std::optional<Assignment>> cache_;
};

/// Sends each query as SMT-LIB text to an external command (`cmd <file>`)
/// and reads `sat`/`unsat` plus a model back.
class BridgeSolver : public Solver {
public:
    explicit BridgeSolver(std::string command) : command_(std::move(command)) {}

protected:
    SolveResult solve(std::span<const Formula> conjunction, const WidthMap& widths) override;

private:
    std::string command_;
};

/// "internal" or "bridge:<cmd>".
std::unique_ptr<Solver> make_solver(std::string_view backend);
/// Reads SYMNET_SOLVER; defaults to the internal solver.
std::unique_ptr<Solver> make_solver_from_env();

// ---- SMT-LIB v2 (QF_BV) ----

std::string to_smtlib(std::span<const Formula> conjunction, const WidthMap& widths);

struct SmtQuery {
    std::vector<Formula> assertions;
    WidthMap widths;
};
SmtQuery parse_smtlib(std::string_view text);

/// Renders `sat` + `(model ...)` or `unsat` in the form the bridge reads.
std::string format_smt_answer(const SolveResult& result, const WidthMap& widths);
SolveResult parse_smt_answer(std::string_view text);

// ---- loop subsumption ----

/// One side of a loop comparison: the live terms of the selected fields (in
/// selector order; nullopt for an absent field) and the constraint store.
struct LoopSide {
    std::vector<std::optional<LinearTerm>> fields;
    std::vector<Formula> constraints;
};

struct LoopVerdict {
    bool loop = false;
    /// For no-loop: a field valuation admitted by `o` but not by `n`.
    std::vector<std::uint64_t> witness;
};

/// Loop iff (not n) and o is unsatisfiable once both sides are expressed over
/// one shared fresh variable per selected field.
LoopVerdict check_loop(Solver& solver, const LoopSide& o, const LoopSide& n);

// ---- witness synthesis ----

struct SynthesisProfile {
    /// Extra constraints (e.g. valid-packet rules), each kept only if the
    /// conjunction stays satisfiable with it.
    std::vector<Formula> preferred;
};

/// A model of the conjunction extended greedily by the profile's preferred
/// constraints. Throws SolverError if the conjunction is unsatisfiable.
Assignment synthesize_model(Solver& solver, std::span<const Formula> conjunction,
                            const SynthesisProfile& profile = {});

/// Concrete value for each wanted term, consistent with the conjunction.
/// Throws SolverError if the conjunction is unsatisfiable.
std::vector<std::uint64_t> synthesize(Solver& solver, std::span<const Formula> conjunction,
                                      std::span<const LinearTerm> wanted, const SynthesisProfile& profile = {});

} // namespace symnet
