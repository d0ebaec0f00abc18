#include "symnet/path_state.hpp"

#include "symnet/error.hpp"

#include <algorithm>

namespace symnet {

std::string_view to_string(PathStatus s) {
    switch (s) {
    case PathStatus::Live: return "live";
    case PathStatus::Delivered: return "delivered";
    case PathStatus::Failed: return "failed";
    case PathStatus::Dropped: return "dropped";
    case PathStatus::Loop: return "loop";
    }
    return "unknown";
}

std::string Location::to_string() const {
    return element + (output ? ".out[" : ".in[") + std::to_string(port) + "]";
}

std::string FieldSelector::to_string() const {
    if (all)
        return "ALL";
    std::string out;
    for (const auto& f : fields)
        out += (out.empty() ? "" : ",") + f;
    return out;
}

PathState::PathState() {
    tags_["Start"] = 0;
    tags_["End"] = 0;
}

void PathState::record(const Variable& var, HistoryKind kind, const Value& v, std::size_t depth,
                       const std::string& where) {
    history_.push_back({var, kind, v, depth, where, location.to_string()});
}

// ---- headers ----

void PathState::allocate_header(std::int64_t offset, unsigned size, Value v, const std::string& where) {
    if (size == 0 || size > kMaxWidth)
        throw PathError(ErrorKind::WidthTooLarge, "header allocation of " + std::to_string(size) + " bits");
    const std::int64_t end = offset + static_cast<std::int64_t>(size);
    auto it = headers_.lower_bound(offset);
    if (it != headers_.end() && it->first == offset) {
        if (it->second.back().size != size)
            throw PathError(ErrorKind::OverlappingHeaderRegion,
                            "offset " + std::to_string(offset) + " already holds " +
                                std::to_string(it->second.back().size) + " bits");
    } else {
        if (it != headers_.end() && it->first < end)
            throw PathError(ErrorKind::OverlappingHeaderRegion,
                            "[" + std::to_string(offset) + "," + std::to_string(end) + ") overlaps offset " +
                                std::to_string(it->first));
        if (it != headers_.begin()) {
            auto prev = std::prev(it);
            if (prev->first + static_cast<std::int64_t>(prev->second.back().size) > offset)
                throw PathError(ErrorKind::OverlappingHeaderRegion,
                                "[" + std::to_string(offset) + "," + std::to_string(end) + ") overlaps offset " +
                                    std::to_string(prev->first));
        }
    }
    if (v.width() != size)
        throw PathError(ErrorKind::WidthMismatch, "initial value width differs from allocation");
    auto& stack = headers_[offset];
    stack.push_back({v, size});
    record({false, offset, {}}, HistoryKind::Allocate, v, stack.size(), where);
}

void PathState::deallocate_header(std::int64_t offset, std::optional<unsigned> size, const std::string& where) {
    auto it = headers_.find(offset);
    if (it == headers_.end())
        throw PathError(ErrorKind::NotAllocated, "no header stack at offset " + std::to_string(offset));
    if (size && *size != it->second.back().size)
        throw PathError(ErrorKind::SizeMismatch, "offset " + std::to_string(offset) + " holds " +
                                                     std::to_string(it->second.back().size) + " bits, not " +
                                                     std::to_string(*size));
    const Value popped = it->second.back().value;
    it->second.pop_back();
    const std::size_t depth = it->second.size();
    if (it->second.empty())
        headers_.erase(it);
    record({false, offset, {}}, HistoryKind::Deallocate, popped, depth, where);
}

const Frame& PathState::header(std::int64_t offset, std::optional<unsigned> width) const {
    auto it = headers_.find(offset);
    if (it != headers_.end()) {
        if (width && *width != it->second.back().size)
            throw PathError(ErrorKind::MisalignedAccess, std::to_string(*width) + "-bit access at offset " +
                                                             std::to_string(offset) + " holding " +
                                                             std::to_string(it->second.back().size) + " bits");
        return it->second.back();
    }
    auto after = headers_.upper_bound(offset);
    if (after != headers_.begin()) {
        auto prev = std::prev(after);
        if (prev->first + static_cast<std::int64_t>(prev->second.back().size) > offset)
            throw PathError(ErrorKind::MisalignedAccess, "offset " + std::to_string(offset) +
                                                             " falls inside the region at " +
                                                             std::to_string(prev->first));
    }
    throw PathError(ErrorKind::UnallocatedHeader, "offset " + std::to_string(offset));
}

void PathState::write_header(std::int64_t offset, Value v, const std::string& where) {
    header(offset);
    auto& stack = headers_.at(offset);
    if (stack.back().size != v.width())
        throw PathError(ErrorKind::WidthMismatch, "offset " + std::to_string(offset) + " holds " +
                                                      std::to_string(stack.back().size) + " bits, value has " +
                                                      std::to_string(v.width()));
    stack.back().value = v;
    record({false, offset, {}}, HistoryKind::Assign, v, stack.size(), where);
}

// ---- metadata ----

std::string PathState::meta_key(const std::string& key, Scope scope) const {
    return scope == Scope::Local ? location.element + "/" + key : key;
}

std::optional<std::string> PathState::find_meta(const std::string& key) const {
    const std::string local = location.element + "/" + key;
    if (metadata_.count(local))
        return local;
    if (metadata_.count(key))
        return key;
    return std::nullopt;
}

void PathState::allocate_meta(const std::string& key, Scope scope, unsigned size, Value v, const std::string& where) {
    if (size == 0 || size > kMaxWidth)
        throw PathError(ErrorKind::WidthTooLarge, "metadata " + key + " of " + std::to_string(size) + " bits");
    if (v.width() != size)
        throw PathError(ErrorKind::WidthMismatch, "initial value width differs from allocation");
    const std::string k = meta_key(key, scope);
    auto& stack = metadata_[k];
    stack.push_back({v, size});
    record({true, 0, k}, HistoryKind::Allocate, v, stack.size(), where);
}

void PathState::deallocate_meta(const std::string& key, std::optional<unsigned> size, const std::string& where) {
    const auto k = find_meta(key);
    if (!k)
        throw PathError(ErrorKind::NotAllocated, "metadata " + key);
    auto it = metadata_.find(*k);
    if (size && *size != it->second.back().size)
        throw PathError(ErrorKind::SizeMismatch, "metadata " + key + " holds " +
                                                     std::to_string(it->second.back().size) + " bits, not " +
                                                     std::to_string(*size));
    const Value popped = it->second.back().value;
    it->second.pop_back();
    const std::size_t depth = it->second.size();
    if (it->second.empty())
        metadata_.erase(it);
    record({true, 0, *k}, HistoryKind::Deallocate, popped, depth, where);
}

const Frame& PathState::meta(const std::string& key) const {
    const auto k = find_meta(key);
    if (!k)
        throw PathError(ErrorKind::UnallocatedMetadata, key);
    return metadata_.at(*k).back();
}

void PathState::write_meta(const std::string& key, Value v, const std::string& where) {
    const auto k = find_meta(key);
    if (!k)
        throw PathError(ErrorKind::UnallocatedMetadata, key);
    auto& stack = metadata_.at(*k);
    if (stack.back().size != v.width())
        throw PathError(ErrorKind::WidthMismatch, "metadata " + key + " holds " +
                                                      std::to_string(stack.back().size) + " bits, value has " +
                                                      std::to_string(v.width()));
    stack.back().value = v;
    record({true, 0, *k}, HistoryKind::Assign, v, stack.size(), where);
}

// ---- tags ----

std::int64_t PathState::tag(const std::string& name) const {
    auto it = tags_.find(name);
    if (it == tags_.end())
        throw PathError(ErrorKind::UnknownTag, name);
    return it->second;
}

void PathState::destroy_tag(const std::string& name) {
    if (!tags_.erase(name))
        throw PathError(ErrorKind::UnknownTag, name);
}

// ---- constraints and lineage ----

std::vector<Formula> PathState::formulas() const {
    std::vector<Formula> out;
    out.reserve(clauses_.size());
    for (const auto& c : clauses_)
        out.push_back(c.formula);
    return out;
}

std::vector<std::string> PathState::port_trace() const {
    std::vector<std::string> out;
    out.reserve(visits_.size());
    for (const auto& v : visits_)
        out.push_back(v.port);
    return out;
}

void PathState::enter(Location loc, const ShorthandTable& table) {
    location = std::move(loc);
    PortVisit visit{location.to_string(), {}};
    for (const auto& [off, stack] : headers_) {
        StackView sv{{false, off, {}}, name_of({false, off, {}}, table), {}, {}};
        for (const auto& f : stack)
            sv.frames.push_back(f.value.id);
        sv.top = stack.back().value.term;
        visit.stacks.push_back(std::move(sv));
    }
    for (const auto& [key, stack] : metadata_) {
        StackView sv{{true, 0, key}, key, {}, {}};
        for (const auto& f : stack)
            sv.frames.push_back(f.value.id);
        sv.top = stack.back().value.term;
        visit.stacks.push_back(std::move(sv));
    }
    visits_.push_back(std::move(visit));
}

std::vector<std::shared_ptr<const Snapshot>> PathState::snapshots_at(const std::string& port) const {
    std::vector<std::shared_ptr<const Snapshot>> out;
    for (auto n = snapshots_; n; n = n->parent)
        if (n->snapshot->port == port)
            out.push_back(n->snapshot);
    std::reverse(out.begin(), out.end());
    return out;
}

void PathState::push_snapshot(std::shared_ptr<const Snapshot> s) {
    snapshots_ = std::make_shared<const SnapNode>(SnapNode{std::move(s), snapshots_});
}

std::string PathState::name_of(const Variable& v, const ShorthandTable& table) const {
    if (v.is_meta)
        return v.key;
    for (const auto& f : table.entries()) {
        auto it = tags_.find(f.tag);
        if (it != tags_.end() && it->second + f.offset == v.offset)
            return f.name;
    }
    const auto start = tags_.count("Start") ? tags_.at("Start") : 0;
    return "@" + std::to_string(v.offset - start);
}

std::optional<Variable> PathState::resolve(const std::string& name, const ShorthandTable& table) const {
    if (const auto* f = table.find(name)) {
        auto it = tags_.find(f->tag);
        if (it == tags_.end())
            return std::nullopt;
        const Variable v{false, it->second + f->offset, {}};
        if (!headers_.count(v.offset))
            return std::nullopt;
        return v;
    }
    if (!name.empty() && name[0] == '@') {
        try {
            std::size_t used = 0;
            const auto start = tags_.count("Start") ? tags_.at("Start") : 0;
            const std::int64_t off = std::stoll(name.substr(1), &used) + start;
            if (used + 1 == name.size() && headers_.count(off))
                return Variable{false, off, {}};
        } catch (const std::exception&) {
        }
        return std::nullopt;
    }
    if (const auto k = find_meta(name))
        return Variable{true, 0, *k};
    return std::nullopt;
}

const Frame* PathState::live(const Variable& v) const {
    if (v.is_meta) {
        auto it = metadata_.find(v.key);
        return it == metadata_.end() ? nullptr : &it->second.back();
    }
    auto it = headers_.find(v.offset);
    return it == headers_.end() ? nullptr : &it->second.back();
}

// ---- snapshots ----

Snapshot snapshot(const PathState& path, const FieldSelector& selector, const ShorthandTable& table,
                  std::string port) {
    Snapshot s;
    s.port = std::move(port);
    if (selector.all) {
        for (const auto& [off, stack] : path.headers()) {
            s.names.push_back(path.name_of({false, off, {}}, table));
            s.terms.push_back(stack.back().value.term);
        }
        for (const auto& [key, stack] : path.metadata()) {
            s.names.push_back(key);
            s.terms.push_back(stack.back().value.term);
        }
    } else {
        for (const auto& name : selector.fields) {
            s.names.push_back(name);
            const auto var = path.resolve(name, table);
            const Frame* f = var ? path.live(*var) : nullptr;
            s.terms.push_back(f ? std::optional<LinearTerm>(f->value.term) : std::nullopt);
        }
    }
    s.constraints = path.formulas();
    s.trace = path.port_trace();
    return s;
}

std::pair<LoopSide, LoopSide> align(const Snapshot& o, const Snapshot& n) {
    std::vector<std::string> names = o.names;
    for (const auto& x : n.names)
        if (std::find(names.begin(), names.end(), x) == names.end())
            names.push_back(x);
    const auto pick = [&](const Snapshot& s, const std::string& name) -> std::optional<LinearTerm> {
        auto it = std::find(s.names.begin(), s.names.end(), name);
        if (it == s.names.end())
            return std::nullopt;
        return s.terms[static_cast<std::size_t>(it - s.names.begin())];
    };
    LoopSide a, b;
    for (const auto& name : names) {
        a.fields.push_back(pick(o, name));
        b.fields.push_back(pick(n, name));
    }
    a.constraints = o.constraints;
    b.constraints = n.constraints;
    return {std::move(a), std::move(b)};
}

} // namespace symnet
