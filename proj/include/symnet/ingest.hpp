#pragma once

#include "symnet/engine.hpp"
#include "symnet/models.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symnet {

/// `vlan,mac,port` per line; `#` starts a comment. Throws ParseError
/// (malformed fields, port above `max_port`, "DuplicateMac" on conflicting ports).
std::vector<MacEntry> parse_mac_table(std::string_view text, unsigned max_port = 4095);

/// Best-effort conversion of `show mac address-table` output to MAC CSV.
/// Interface names map to port indices by first appearance.
std::string show_mac_to_csv(std::string_view text);

struct FibTable {
    std::vector<FibEntry> entries;
    std::vector<std::string> interfaces; // port index -> name
    std::vector<std::string> warnings;
};

/// `a.b.c.d/len,interface` per line. Host bits are cleared with a warning.
/// Interfaces map to ports by first appearance unless `ports` names them.
FibTable parse_fib(std::string_view text, const std::map<std::string, unsigned>& ports = {});

struct ClickConfig {
    NetworkGraph graph;
    std::vector<std::string> order; // declaration order
};

/// `name :: Kind(args);` declarations and `a [i]-> [j]b -> c;` chains.
ClickConfig parse_click(std::string_view text, const ClickOptions& options = {});

struct ElementSpec {
    std::string id;
    std::string kind;
    std::string source;    // model file relative to the topology file, may be empty
    std::string params;    // JSON object text, canonical form
    friend bool operator==(const ElementSpec&, const ElementSpec&) = default;
};

struct LinkSpec {
    std::string from; // "id.out[i]"
    std::string to;   // "id.in[j]"
    friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

struct TopologySpec {
    std::vector<ElementSpec> elements;
    std::vector<LinkSpec> links;
    friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

/// Throws ParseError for malformed JSON or missing members.
TopologySpec parse_topology_spec(std::string_view text);
std::string print_topology(const TopologySpec& spec);

/// Builds every element from its declared source and links them. Throws
/// ModelError for dangling endpoints, missing files or duplicate links.
NetworkGraph build_topology(const TopologySpec& spec, const std::filesystem::path& base_dir);
NetworkGraph parse_topology(std::string_view text, const std::filesystem::path& base_dir = ".");
NetworkGraph load_topology(const std::filesystem::path& file);

/// "A.out[1]" / "A.out1" -> {A, 1}; `output` selects which direction is expected.
PortRef parse_port_ref(const std::string& text, bool output);

std::string read_file(const std::filesystem::path& file);

} // namespace symnet
