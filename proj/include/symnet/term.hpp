#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace symnet {

using SymbolId = std::uint64_t;
using ValueId = std::uint64_t;

inline constexpr unsigned kMaxWidth = 64;

constexpr std::uint64_t width_mask(unsigned width) {
    return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

/// Concrete values for symbols; missing symbols read as 0.
using Assignment = std::map<SymbolId, std::uint64_t>;

/// A width-tagged affine combination of symbols with wrap-around semantics:
/// sum(coeff_i * s_i) + constant (mod 2^width). Canonical at construction:
/// monomials sorted by symbol, coefficients reduced mod 2^width, zeros dropped.
class LinearTerm {
public:
    struct Monomial {
        SymbolId symbol;
        std::uint64_t coeff;
        friend bool operator==(const Monomial&, const Monomial&) = default;
        friend auto operator<=>(const Monomial&, const Monomial&) = default;
    };

    LinearTerm() = default;

    static LinearTerm constant(unsigned width, std::uint64_t value);
    static LinearTerm symbol(unsigned width, SymbolId id);

    unsigned width() const noexcept { return width_; }
    std::uint64_t constant_part() const noexcept { return constant_; }
    std::span<const Monomial> monomials() const noexcept { return monomials_; }

    bool is_concrete() const noexcept { return monomials_.empty(); }
    /// The bare symbol this term denotes, if it is exactly `1*s + 0`.
    std::optional<SymbolId> as_symbol() const noexcept;

    LinearTerm operator+(const LinearTerm& rhs) const;
    LinearTerm operator-(const LinearTerm& rhs) const;
    LinearTerm operator-() const;
    LinearTerm plus_constant(std::uint64_t value) const;
    LinearTerm scaled(std::uint64_t factor) const;

    LinearTerm substitute(const std::map<SymbolId, LinearTerm>& replacement) const;
    std::uint64_t evaluate(const Assignment& model) const;

    void collect_symbols(std::vector<SymbolId>& out) const;

    /// Human-readable, e.g. `s3 - 1` or `0x7b`. Symbols print as `s<id>`.
    std::string to_string() const;

    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
    friend auto operator<=>(const LinearTerm&, const LinearTerm&) = default;

private:
    LinearTerm(unsigned width, std::uint64_t constant, std::vector<Monomial> monomials);
    void canonicalize();

    unsigned width_ = 0;
    std::uint64_t constant_ = 0;
    std::vector<Monomial> monomials_;
};

/// Signed representative of a coefficient in (-2^(w-1), 2^(w-1)].
std::int64_t signed_coeff(std::uint64_t coeff, unsigned width);

/// A value bound in a header or metadata frame. Every binding carries an
/// identity; copies of a binding keep it, any other assignment mints a new one.
struct Value {
    ValueId id = 0;
    LinearTerm term;

    unsigned width() const noexcept { return term.width(); }
    bool is_concrete() const noexcept { return term.is_concrete(); }

    friend bool operator==(const Value&, const Value&) = default;
};

/// Run-wide source of fresh symbol and value identifiers.
class IdSource {
public:
    explicit IdSource(std::uint64_t first = 1) : next_(first) {}
    std::uint64_t next() noexcept { return next_.fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t peek() const noexcept { return next_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> next_;
};

} // namespace symnet
