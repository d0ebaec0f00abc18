#include "symnet/report.hpp"

#include <json.hpp>

namespace symnet {

namespace {

nlohmann::json path_json(const PathReport& r) {
    nlohmann::json vars = nlohmann::json::object();
    for (const auto& v : r.variables)
        vars[v.name] = {{"value", v.value}, {"width", v.width}, {"constraints", v.constraints}};
    nlohmann::json j = {{"id", r.id},
                        {"status", std::string(to_string(r.status))},
                        {"reason", r.reason},
                        {"ports", r.ports},
                        {"instructions", r.instructions},
                        {"constraints", r.constraints},
                        {"variables", vars}};
    if (r.witness)
        j["witness"] = *r.witness;
    if (!r.fields.empty()) {
        nlohmann::json fields = nlohmann::json::object();
        for (const auto& f : r.fields) {
            if (!f.error.empty()) {
                fields[f.field] = {{"error", f.error}};
                continue;
            }
            nlohmann::json v = {{"invariant", f.invariant}, {"visibility", std::string(to_string(f.visibility))}};
            if (!f.invariant)
                v["modifiedAt"] = f.modified_at;
            fields[f.field] = v;
        }
        j["fields"] = fields;
    }
    return j;
}

nlohmann::json snapshot_json(const Snapshot& s) {
    nlohmann::json fields = nlohmann::json::object();
    for (std::size_t i = 0; i < s.names.size(); ++i)
        fields[s.names[i]] = s.terms[i] ? nlohmann::json(s.terms[i]->to_string()) : nlohmann::json(nullptr);
    std::vector<std::string> constraints;
    for (const auto& f : s.constraints)
        constraints.push_back(f.to_string());
    return {{"fields", fields}, {"constraints", constraints}};
}

} // namespace

std::string report_json(const std::vector<PathReport>& paths, const EngineStats& stats,
                        const std::vector<LoopReport>* loops, ReportOptions options) {
    nlohmann::json root;
    root["paths"] = nlohmann::json::array();
    for (const auto& p : paths)
        root["paths"].push_back(path_json(p));
    root["stats"] = {{"pathCount", stats.paths},
                     {"solverCalls", stats.solver_calls},
                     {"solverMillis", options.timing ? stats.solver_millis : 0.0}};
    if (loops) {
        root["loops"] = nlohmann::json::array();
        for (const auto& l : *loops)
            root["loops"].push_back({{"path", l.path},
                                     {"port", l.port},
                                     {"selector", l.selector.to_string()},
                                     {"old", snapshot_json(*l.old_state)},
                                     {"new", snapshot_json(*l.new_state)},
                                     {"trace", l.trace}});
    }
    return root.dump(options.indent) + "\n";
}

} // namespace symnet
