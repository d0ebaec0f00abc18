#include "symnet/ingest.hpp"

#include "symnet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace symnet {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

template <class F>
void for_lines(std::string_view text, F&& f) {
    std::size_t line = 1, start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view l = text.substr(start, i - start);
            if (!l.empty() && l.back() == '\r')
                l.remove_suffix(1);
            f(l, line);
            ++line;
            start = i + 1;
        }
    }
}

std::string strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

std::optional<std::uint64_t> parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty())
        return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

} // namespace

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw ModelError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- MAC tables ----

std::vector<MacEntry> parse_mac_table(std::string_view text, unsigned max_port) {
    std::vector<MacEntry> out;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<unsigned, std::size_t>> seen;
    for_lines(text, [&](std::string_view raw, std::size_t line) {
        const std::string l = strip_comment(raw);
        if (l.empty())
            return;
        const auto f = split(l, ',');
        if (f.size() != 3)
            throw ParseError("expected vlan,mac,port", line);
        const auto vlan = parse_uint(f[0]);
        if (!vlan || *vlan > 4095)
            throw ParseError("malformed VLAN \"" + f[0] + "\"", line);
        const auto mac = parse_mac(f[1]);
        if (!mac)
            throw ParseError("malformed MAC \"" + f[1] + "\"", line);
        const auto port = parse_uint(f[2]);
        if (!port)
            throw ParseError("malformed port \"" + f[2] + "\"", line);
        if (*port > max_port)
            throw ParseError("port " + f[2] + " out of range (max " + std::to_string(max_port) + ")", line);
        const MacEntry e{*vlan, *mac, static_cast<unsigned>(*port)};
        auto [it, fresh] = seen.emplace(std::make_pair(e.vlan, e.mac), std::make_pair(e.port, line));
        if (!fresh) {
            if (it->second.first != e.port)
                throw ParseError("DuplicateMac(" + std::to_string(line) + "): " + f[1] + " also on port " +
                                     std::to_string(it->second.first) + " at line " +
                                     std::to_string(it->second.second),
                                 line);
            return;
        }
        out.push_back(e);
    });
    return out;
}

std::string show_mac_to_csv(std::string_view text) {
    std::map<std::string, unsigned> ports;
    std::string out;
    for_lines(text, [&](std::string_view raw, std::size_t) {
        std::istringstream ss{std::string(raw)};
        std::vector<std::string> tok;
        for (std::string t; ss >> t;)
            tok.push_back(t);
        if (tok.size() < 4)
            return;
        const auto vlan = parse_uint(tok[0]);
        if (!vlan)
            return;
        std::string mac;
        const std::string& m = tok[1];
        if (m.size() == 14 && m[4] == '.' && m[9] == '.') {
            const std::string hex = m.substr(0, 4) + m.substr(5, 4) + m.substr(10, 4);
            for (std::size_t i = 0; i < 12; i += 2)
                mac += (i ? ":" : "") + hex.substr(i, 2);
        } else {
            mac = m;
        }
        if (!parse_mac(mac))
            return;
        const std::string& iface = tok.back();
        if (iface == "CPU")
            return;
        auto it = ports.emplace(iface, static_cast<unsigned>(ports.size())).first;
        std::transform(mac.begin(), mac.end(), mac.begin(), [](unsigned char c) { return std::tolower(c); });
        out += std::to_string(*vlan) + "," + mac + "," + std::to_string(it->second) + "\n";
    });
    return out;
}

// ---- FIBs ----

FibTable parse_fib(std::string_view text, const std::map<std::string, unsigned>& ports) {
    FibTable t;
    std::map<std::string, unsigned> assigned = ports;
    for (const auto& [name, port] : ports) {
        if (t.interfaces.size() <= port)
            t.interfaces.resize(port + 1);
        t.interfaces[port] = name;
    }
    for_lines(text, [&](std::string_view raw, std::size_t line) {
        const std::string l = strip_comment(raw);
        if (l.empty())
            return;
        const auto f = split(l, ',');
        if (f.size() != 2 || f[1].empty())
            throw ParseError("expected prefix/len,interface", line);
        const auto slash = f[0].find('/');
        if (slash == std::string::npos)
            throw ParseError("missing prefix length in \"" + f[0] + "\"", line);
        const auto base = parse_ipv4(f[0].substr(0, slash));
        if (!base)
            throw ParseError("malformed address \"" + f[0].substr(0, slash) + "\"", line);
        const auto len = parse_uint(f[0].substr(slash + 1));
        if (!len)
            throw ParseError("malformed prefix length \"" + f[0].substr(slash + 1) + "\"", line);
        if (*len > 32)
            throw ParseError("prefix length " + std::to_string(*len) + " exceeds 32", line);
        const std::uint64_t mask = *len == 0 ? 0 : (0xffffffffull << (32 - *len)) & 0xffffffffull;
        std::uint64_t b = *base;
        if ((b & ~mask) != 0) {
            b &= mask;
            t.warnings.push_back("line " + std::to_string(line) + ": " + f[0] + " canonicalized to " +
                                 format_ipv4(b) + "/" + std::to_string(*len));
        }
        auto it = assigned.find(f[1]);
        if (it == assigned.end()) {
            unsigned next = 0;
            while (next < t.interfaces.size() && !t.interfaces[next].empty())
                ++next;
            if (t.interfaces.size() <= next)
                t.interfaces.resize(next + 1);
            t.interfaces[next] = f[1];
            it = assigned.emplace(f[1], next).first;
        }
        t.entries.push_back({b, static_cast<unsigned>(*len), it->second});
    });
    return t;
}

// ---- Click ----

namespace {

std::string strip_click_comments(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text.substr(i, 2) == "//") {
            while (i < text.size() && text[i] != '\n')
                ++i;
            if (i < text.size())
                out += '\n';
        } else if (text.substr(i, 2) == "/*") {
            const auto end = text.find("*/", i + 2);
            for (std::size_t j = i; j < std::min(end == std::string_view::npos ? text.size() : end + 2, text.size());
                 ++j)
                out += text[j] == '\n' ? '\n' : ' ';
            i = end == std::string_view::npos ? text.size() : end + 1;
        } else {
            out += text[i];
        }
    }
    return out;
}

struct Hop {
    std::optional<unsigned> in;
    std::optional<unsigned> out;
    std::string name;
};

std::vector<std::string> split_top(std::string_view s, std::string_view sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(')
            ++depth;
        else if (s[i] == ')')
            --depth;
        else if (depth == 0 && s.substr(i, sep.size()) == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + sep.size();
            i += sep.size() - 1;
        }
    }
    out.push_back(trim(s.substr(start)));
    return out;
}

bool ident(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '/' || c == '@';
    }) && !std::isdigit(static_cast<unsigned char>(s[0]));
}

} // namespace

ClickConfig parse_click(std::string_view raw, const ClickOptions& options) {
    const std::string text = strip_click_comments(raw);
    ClickConfig cfg;
    std::vector<std::pair<PortRef, PortRef>> links;
    std::size_t anonymous = 0;

    const auto declare = [&](const std::string& name, const std::string& spec, std::size_t line) {
        std::string kind = spec;
        std::vector<std::string> args;
        const auto open = spec.find('(');
        if (open != std::string::npos) {
            if (spec.back() != ')')
                throw ParseError("unbalanced parentheses in \"" + spec + "\"", line);
            kind = trim(spec.substr(0, open));
            const std::string inner = spec.substr(open + 1, spec.size() - open - 2);
            if (!trim(inner).empty())
                args = split_top(inner, ",");
        }
        if (!ident(kind))
            throw ParseError("malformed element class \"" + kind + "\"", line);
        if (cfg.graph.has(name))
            throw ParseError("element " + name + " declared twice", line);
        cfg.graph.add(build_click_element(name, kind, args, options));
        cfg.order.push_back(name);
    };

    std::size_t line = 1, start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i < text.size() && text[i] == '(')
            ++depth;
        if (i < text.size() && text[i] == ')')
            --depth;
        if (i < text.size() && (text[i] != ';' || depth > 0))
            continue;
        const std::string stmt_raw = text.substr(start, i - start);
        const auto first = stmt_raw.find_first_not_of(" \t\r\n");
        const std::size_t stmt_line =
            line + static_cast<std::size_t>(std::count(
                       stmt_raw.begin(),
                       stmt_raw.begin() + static_cast<std::ptrdiff_t>(first == std::string::npos ? 0 : first), '\n'));
        line += static_cast<std::size_t>(std::count(stmt_raw.begin(), stmt_raw.end(), '\n'));
        start = i + 1;
        const std::string stmt = trim(stmt_raw);
        if (stmt.empty())
            continue;
        if (depth != 0)
            throw ParseError("unbalanced parentheses", stmt_line);
        std::vector<Hop> hops;
        for (std::string part : split_top(stmt, "->")) {
            if (part.empty())
                throw ParseError("empty connection endpoint", stmt_line);
            Hop h;
            if (part.front() == '[') {
                const auto close = part.find(']');
                const auto v = close == std::string::npos ? std::nullopt : parse_uint(trim(part.substr(1, close - 1)));
                if (!v)
                    throw ParseError("malformed input port selector in \"" + part + "\"", stmt_line);
                h.in = static_cast<unsigned>(*v);
                part = trim(part.substr(close + 1));
            }
            if (!part.empty() && part.back() == ']') {
                const auto open = part.rfind('[');
                const auto v = open == std::string::npos
                                   ? std::nullopt
                                   : parse_uint(trim(part.substr(open + 1, part.size() - open - 2)));
                if (!v)
                    throw ParseError("malformed output port selector in \"" + part + "\"", stmt_line);
                h.out = static_cast<unsigned>(*v);
                part = trim(part.substr(0, open));
            }
            const auto colons = split_top(part, "::");
            if (colons.size() == 2) {
                if (!ident(colons[0]))
                    throw ParseError("malformed element name \"" + colons[0] + "\"", stmt_line);
                declare(colons[0], colons[1], stmt_line);
                h.name = colons[0];
            } else if (colons.size() == 1 && ident(part) && cfg.graph.has(part)) {
                h.name = part;
            } else if (colons.size() == 1 && (part.find('(') != std::string::npos || ident(part))) {
                const std::string kind = trim(part.substr(0, part.find('(')));
                if (ident(part) && !is_supported_click_kind(part))
                    throw ParseError("undeclared element \"" + part + "\"", stmt_line);
                h.name = kind + "@" + std::to_string(++anonymous);
                declare(h.name, part, stmt_line);
            } else {
                throw ParseError("malformed statement \"" + part + "\"", stmt_line);
            }
            hops.push_back(std::move(h));
        }
        for (std::size_t k = 0; k + 1 < hops.size(); ++k)
            links.push_back({{hops[k].name, hops[k].out.value_or(0)}, {hops[k + 1].name, hops[k + 1].in.value_or(0)}});
        if (hops.size() == 1 && (hops[0].in || hops[0].out))
            throw ParseError("port selector outside a connection", stmt_line);
    }
    for (const auto& [from, to] : links)
        cfg.graph.link(from, to);
    return cfg;
}

// ---- topology ----

PortRef parse_port_ref(const std::string& text, bool output) {
    const std::string dir = output ? ".out" : ".in";
    const auto at = text.rfind(dir);
    if (at == std::string::npos || at == 0)
        throw ModelError("malformed port reference \"" + text + "\" (expected id" + dir + "[n])");
    std::string rest = text.substr(at + dir.size());
    if (rest.size() >= 2 && rest.front() == '[' && rest.back() == ']')
        rest = rest.substr(1, rest.size() - 2);
    const auto n = parse_uint(rest);
    if (!n)
        throw ModelError("malformed port reference \"" + text + "\"");
    return {text.substr(0, at), static_cast<unsigned>(*n)};
}

TopologySpec parse_topology_spec(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            line += text[i] == '\n';
        throw ParseError(std::string("malformed topology JSON: ") + e.what(), line);
    }
    const auto need_string = [](const nlohmann::json& o, const char* key, bool required) -> std::string {
        if (!o.contains(key)) {
            if (required)
                throw ParseError(std::string("topology entry lacks \"") + key + "\"", 0);
            return {};
        }
        if (!o[key].is_string())
            throw ParseError(std::string("topology member \"") + key + "\" must be a string", 0);
        return o[key].get<std::string>();
    };
    if (!j.is_object() || !j.contains("elements") || !j["elements"].is_array())
        throw ParseError("topology needs an \"elements\" array", 1);
    TopologySpec spec;
    for (const auto& e : j["elements"]) {
        if (!e.is_object())
            throw ParseError("topology element must be an object", 0);
        ElementSpec s;
        s.id = need_string(e, "id", true);
        s.kind = need_string(e, "kind", true);
        s.source = need_string(e, "source", false);
        const nlohmann::json params = e.contains("params") ? e["params"] : nlohmann::json::object();
        if (!params.is_object())
            throw ParseError("params of " + s.id + " must be an object", 0);
        s.params = params.dump();
        spec.elements.push_back(std::move(s));
    }
    if (j.contains("links")) {
        if (!j["links"].is_array())
            throw ParseError("\"links\" must be an array", 0);
        for (const auto& l : j["links"]) {
            if (!l.is_object())
                throw ParseError("topology link must be an object", 0);
            spec.links.push_back({need_string(l, "from", true), need_string(l, "to", true)});
        }
    }
    return spec;
}

std::string print_topology(const TopologySpec& spec) {
    nlohmann::json j;
    j["elements"] = nlohmann::json::array();
    for (const auto& e : spec.elements) {
        nlohmann::json o = {{"id", e.id}, {"kind", e.kind}};
        if (!e.source.empty())
            o["source"] = e.source;
        const auto params = e.params.empty() ? nlohmann::json::object() : nlohmann::json::parse(e.params);
        if (!params.empty())
            o["params"] = params;
        j["elements"].push_back(o);
    }
    j["links"] = nlohmann::json::array();
    for (const auto& l : spec.links)
        j["links"].push_back({{"from", l.from}, {"to", l.to}});
    return j.dump(2) + "\n";
}

namespace {

std::uint64_t json_number(const nlohmann::json& p, const char* key, const std::string& id) {
    if (!p.contains(key))
        throw ModelError(id + ": missing parameter \"" + key + "\"");
    const auto& v = p[key];
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (auto ip = parse_ipv4(s))
            return *ip;
        if (auto mac = parse_mac(s))
            return *mac;
        if (auto n = parse_uint(s))
            return *n;
    }
    throw ModelError(id + ": parameter \"" + key + "\" is not a number or address");
}

SwitchMode switch_mode(const nlohmann::json& p, const std::string& id) {
    const std::string m = p.value("mode", std::string("egress"));
    if (m == "basic")
        return SwitchMode::Basic;
    if (m == "ingress")
        return SwitchMode::Ingress;
    if (m == "egress")
        return SwitchMode::Egress;
    throw ModelError(id + ": unknown switch mode \"" + m + "\"");
}

ElementModel build_spec_element(const ElementSpec& e, const std::filesystem::path& base) {
    const auto params = e.params.empty() ? nlohmann::json::object() : nlohmann::json::parse(e.params);
    const auto source_text = [&]() {
        if (e.source.empty())
            throw ModelError(e.id + ": kind " + e.kind + " needs a \"source\" file");
        const auto path = base / e.source;
        if (!std::filesystem::exists(path))
            throw ModelError(e.id + ": missing model file " + path.string());
        return read_file(path);
    };
    const auto with_file = [&](auto&& f) {
        try {
            return f(source_text());
        } catch (const ParseError& err) {
            throw ModelError(e.id + ": " + e.source + ": " + err.what());
        }
    };
    if (e.kind == "sefl") {
        const std::string code =
            params.contains("code") ? params["code"].get<std::string>() : std::string();
        const auto build = [&](const std::string& text) {
            ElementCode c = parse_sefl(text);
            return make_element(e.id, "sefl", c, static_cast<unsigned>(params.value("inputs", 0)),
                                static_cast<unsigned>(params.value("outputs", 0)));
        };
        if (!code.empty()) {
            try {
                return build(code);
            } catch (const ParseError& err) {
                throw ModelError(e.id + ": inline code: " + err.what());
            }
        }
        return with_file(build);
    }
    if (e.kind == "switch")
        return with_file([&](const std::string& t) { return build_switch(e.id, parse_mac_table(t), switch_mode(params, e.id)); });
    if (e.kind == "router") {
        std::map<std::string, unsigned> ports;
        if (params.contains("interfaces"))
            for (auto& [name, port] : params["interfaces"].items())
                ports[name] = port.get<unsigned>();
        RouterOptions ro;
        ro.field = params.value("field", ro.field);
        ro.width = params.value("width", ro.width);
        return with_file([&](const std::string& t) { return build_router(e.id, parse_fib(t, ports).entries, ro); });
    }
    if (e.kind == "nat")
        return build_nat(e.id, json_number(params, "external", e.id), json_number(params, "portLo", e.id),
                         json_number(params, "portHi", e.id));
    if (e.kind == "encap")
        return build_encap(e.id, json_number(params, "src", e.id), json_number(params, "dst", e.id));
    if (e.kind == "decap")
        return build_decap(e.id);
    if (e.kind == "encrypt")
        return build_encrypt(e.id, json_number(params, "key", e.id));
    if (e.kind == "decrypt")
        return build_decrypt(e.id, json_number(params, "key", e.id));
    if (e.kind == "tcp-options")
        return build_tcp_options(e.id, OptionsPolicy::asa_default(params.value("sack", 4u)));
    if (is_supported_click_kind(e.kind)) {
        std::vector<std::string> args;
        if (params.contains("args"))
            for (const auto& a : params["args"])
                args.push_back(a.is_string() ? a.get<std::string>() : a.dump());
        ClickOptions co;
        co.rewriter_guard = params.value("guard", true);
        return build_click_element(e.id, e.kind, args, co);
    }
    throw ModelError(e.id + ": unknown element kind \"" + e.kind + "\"");
}

} // namespace

NetworkGraph build_topology(const TopologySpec& spec, const std::filesystem::path& base_dir) {
    NetworkGraph net;
    for (const auto& e : spec.elements) {
        try {
            net.add(build_spec_element(e, base_dir));
        } catch (const nlohmann::json::exception& err) {
            throw ModelError(e.id + ": bad parameters: " + err.what());
        }
    }
    for (const auto& l : spec.links) {
        const PortRef from = parse_port_ref(l.from, true);
        const PortRef to = parse_port_ref(l.to, false);
        if (!net.has(from.element))
            throw ModelError("link from unknown element " + from.element);
        if (!net.has(to.element))
            throw ModelError("link to unknown element " + to.element);
        net.link(from, to);
    }
    net.validate();
    return net;
}

NetworkGraph parse_topology(std::string_view text, const std::filesystem::path& base_dir) {
    return build_topology(parse_topology_spec(text), base_dir);
}

NetworkGraph load_topology(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file))
        throw ModelError("missing topology file " + file.string());
    return parse_topology(read_file(file), file.parent_path());
}

} // namespace symnet
