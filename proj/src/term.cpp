#include "symnet/term.hpp"

#include "symnet/error.hpp"

#include <algorithm>
#include <sstream>

namespace symnet {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::UnknownTag: return "UnknownTag";
    case ErrorKind::UnallocatedHeader: return "UnallocatedHeader";
    case ErrorKind::UnallocatedMetadata: return "UnallocatedMetadata";
    case ErrorKind::MisalignedAccess: return "MisalignedAccess";
    case ErrorKind::SymbolicAddress: return "SymbolicAddress";
    case ErrorKind::OverlappingHeaderRegion: return "OverlappingHeaderRegion";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NotAllocated: return "NotAllocated";
    case ErrorKind::WidthMismatch: return "WidthMismatch";
    case ErrorKind::WidthTooLarge: return "WidthTooLarge";
    case ErrorKind::LiteralOverflow: return "LiteralOverflow";
    case ErrorKind::UnknownShorthand: return "UnknownShorthand";
    case ErrorKind::InvalidPort: return "InvalidPort";
    case ErrorKind::UnsupportedFragment: return "UnsupportedFragment";
    }
    return "Unknown";
}

namespace {

void check_width(unsigned width) {
    if (width == 0 || width > kMaxWidth)
        throw PathError(ErrorKind::WidthTooLarge, "width " + std::to_string(width) + " outside 1..64");
}

void require_same_width(const LinearTerm& a, const LinearTerm& b) {
    if (a.width() != b.width())
        throw PathError(ErrorKind::WidthMismatch,
                        "operands of width " + std::to_string(a.width()) + " and " + std::to_string(b.width()));
}

} // namespace

LinearTerm::LinearTerm(unsigned width, std::uint64_t constant, std::vector<Monomial> monomials)
    : width_(width)
    , constant_(constant)
    , monomials_(std::move(monomials)) {
    canonicalize();
}

void LinearTerm::canonicalize() {
    const std::uint64_t mask = width_mask(width_);
    constant_ &= mask;
    std::sort(monomials_.begin(), monomials_.end(),
              [](const Monomial& a, const Monomial& b) { return a.symbol < b.symbol; });
    std::vector<Monomial> merged;
    merged.reserve(monomials_.size());
    for (const auto& m : monomials_) {
        if (!merged.empty() && merged.back().symbol == m.symbol)
            merged.back().coeff += m.coeff;
        else
            merged.push_back(m);
    }
    monomials_.clear();
    for (auto& m : merged) {
        m.coeff &= mask;
        if (m.coeff != 0)
            monomials_.push_back(m);
    }
}

LinearTerm LinearTerm::constant(unsigned width, std::uint64_t value) {
    check_width(width);
    if ((value & ~width_mask(width)) != 0)
        throw PathError(ErrorKind::LiteralOverflow,
                        std::to_string(value) + " does not fit in " + std::to_string(width) + " bits");
    return LinearTerm(width, value, {});
}

LinearTerm LinearTerm::symbol(unsigned width, SymbolId id) {
    check_width(width);
    return LinearTerm(width, 0, {Monomial{id, 1}});
}

std::optional<SymbolId> LinearTerm::as_symbol() const noexcept {
    if (constant_ == 0 && monomials_.size() == 1 && monomials_[0].coeff == 1)
        return monomials_[0].symbol;
    return std::nullopt;
}

LinearTerm LinearTerm::operator+(const LinearTerm& rhs) const {
    require_same_width(*this, rhs);
    std::vector<Monomial> all = monomials_;
    all.insert(all.end(), rhs.monomials_.begin(), rhs.monomials_.end());
    return LinearTerm(width_, constant_ + rhs.constant_, std::move(all));
}

LinearTerm LinearTerm::operator-(const LinearTerm& rhs) const { return *this + (-rhs); }

LinearTerm LinearTerm::operator-() const {
    std::vector<Monomial> neg = monomials_;
    for (auto& m : neg)
        m.coeff = (0 - m.coeff);
    return LinearTerm(width_, 0 - constant_, std::move(neg));
}

LinearTerm LinearTerm::plus_constant(std::uint64_t value) const {
    return LinearTerm(width_, constant_ + value, monomials_);
}

LinearTerm LinearTerm::scaled(std::uint64_t factor) const {
    std::vector<Monomial> out = monomials_;
    for (auto& m : out)
        m.coeff *= factor;
    return LinearTerm(width_, constant_ * factor, std::move(out));
}

LinearTerm LinearTerm::substitute(const std::map<SymbolId, LinearTerm>& replacement) const {
    LinearTerm out(width_, constant_, {});
    std::vector<Monomial> kept;
    for (const auto& m : monomials_) {
        auto it = replacement.find(m.symbol);
        if (it == replacement.end()) {
            kept.push_back(m);
            continue;
        }
        require_same_width(*this, it->second);
        out = out + it->second.scaled(m.coeff);
    }
    return out + LinearTerm(width_, 0, std::move(kept));
}

std::uint64_t LinearTerm::evaluate(const Assignment& model) const {
    std::uint64_t acc = constant_;
    for (const auto& m : monomials_) {
        auto it = model.find(m.symbol);
        const std::uint64_t v = it == model.end() ? 0 : it->second;
        acc += m.coeff * v;
    }
    return acc & width_mask(width_);
}

void LinearTerm::collect_symbols(std::vector<SymbolId>& out) const {
    for (const auto& m : monomials_)
        out.push_back(m.symbol);
}

std::int64_t signed_coeff(std::uint64_t coeff, unsigned width) {
    coeff &= width_mask(width);
    if (width >= 64)
        return static_cast<std::int64_t>(coeff);
    const std::uint64_t half = std::uint64_t{1} << (width - 1);
    if (coeff > half)
        return static_cast<std::int64_t>(coeff) - static_cast<std::int64_t>(std::uint64_t{1} << width);
    return static_cast<std::int64_t>(coeff);
}

std::string LinearTerm::to_string() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& m : monomials_) {
        const std::int64_t c = signed_coeff(m.coeff, width_);
        const bool negative = c < 0 && width_ > 1;
        const std::uint64_t magnitude = negative ? static_cast<std::uint64_t>(-(c + 1)) + 1 : m.coeff;
        if (first)
            out << (negative ? "-" : "");
        else
            out << (negative ? " - " : " + ");
        if (magnitude != 1)
            out << magnitude << "*";
        out << "s" << m.symbol;
        first = false;
    }
    if (first) {
        out << constant_;
    } else if (constant_ != 0) {
        // Print small negative offsets as subtraction, e.g. `s1 - 1`.
        const std::int64_t c = signed_coeff(constant_, width_);
        if (c < 0 && width_ > 1)
            out << " - " << static_cast<std::uint64_t>(-(c + 1)) + 1;
        else
            out << " + " << constant_;
    }
    return out.str();
}

} // namespace symnet
