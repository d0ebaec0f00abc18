#pragma once

#include "symnet/engine.hpp"
#include "symnet/sefl.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace symnet {

// ---- packet templates ----

/// Symbolic packet creation code. `name` is one of tcp, udp, ip, ether;
/// "udp-less-tcp-fields" is accepted as udp. Throws ModelError otherwise.
Instr packet_template(std::string_view name);
Instr tcp_packet();
Instr udp_packet();
/// IPv4 + TCP without an Ethernet header (L3 at bit 0).
Instr ip_packet();
Instr ether_packet();

inline const std::vector<unsigned> kDefaultOptionKinds = {2, 3, 4, 5, 8, 30};

struct OptionWidths {
    unsigned present = 8;
    unsigned size = 8;
    unsigned value = 32;
};

/// Allocates OPTx / SIZEx / VALx metadata with fresh symbolic values.
Instr tcp_options_allocation(const std::vector<unsigned>& kinds = kDefaultOptionKinds, OptionWidths widths = {});

// ---- switches ----

struct MacEntry {
    std::uint64_t vlan = 0;
    std::uint64_t mac = 0;
    unsigned port = 0;
    friend bool operator==(const MacEntry&, const MacEntry&) = default;
};

enum class SwitchMode { Basic, Ingress, Egress };

/// Metadata key carrying the VLAN id when a table spans several VLANs.
inline constexpr const char* kVlanKey = "VLAN";

ElementModel build_switch(const std::string& id, const std::vector<MacEntry>& entries, SwitchMode mode);

// ---- router ----

struct FibEntry {
    std::uint64_t base = 0;
    unsigned length = 0;
    unsigned port = 0;
    friend bool operator==(const FibEntry&, const FibEntry&) = default;
};

struct RouterOptions {
    /// Shorthand header name, otherwise a metadata key.
    std::string field = "IpDst";
    unsigned width = 32;
};

ElementModel build_router(const std::string& id, const std::vector<FibEntry>& fib, RouterOptions options = {});

/// Guard for one FIB entry: its prefix minus the immediately nested, more
/// specific prefixes of the table.
Cond lpm_guard(const std::vector<FibEntry>& fib, std::size_t index, const RouterOptions& options = {});

// ---- middleboxes ----

/// Input 0 rewrites outbound traffic to output 0; input 1 restores replies to output 1.
ElementModel build_nat(const std::string& id, std::uint64_t external_ip, std::uint64_t port_lo,
                       std::uint64_t port_hi);

/// Metadata pushed by each encapsulation and popped by each decapsulation.
inline constexpr const char* kTunnelKey = "IPinIP";

ElementModel build_encap(const std::string& id, std::uint64_t outer_src, std::uint64_t outer_dst);
ElementModel build_decap(const std::string& id);
std::pair<ElementModel, ElementModel> build_tunnel_endpoints(const std::string& encap_id, const std::string& decap_id,
                                                             std::uint64_t outer_src, std::uint64_t outer_dst);

std::pair<ElementModel, ElementModel> build_crypto(const std::string& encrypt_id, const std::string& decrypt_id,
                                                   std::uint64_t key);
ElementModel build_encrypt(const std::string& id, std::uint64_t key);
ElementModel build_decrypt(const std::string& id, std::uint64_t key);

// ---- TCP options firewall ----

struct OptionAction {
    enum class Kind { Allow, Strip, Force } kind = Kind::Allow;
    std::uint64_t cap = 0;  // Force: value ceiling
    std::uint64_t size = 0; // Force: SIZEx written
};

struct OptionsPolicy {
    std::map<unsigned, OptionAction> actions;
    /// Option kinds stripped only when TcpDst equals the given port.
    std::vector<std::pair<unsigned, std::uint64_t>> strip_if_dst;
    /// Reassign every present option to a fresh value when TcpDataOffset < 5.
    bool invalid_length_guard = false;

    /// Multipath stripped, SackOK stripped for port 80, MSS forced to at most 1380.
    static OptionsPolicy asa_default(unsigned sack_kind = 4);
};

ElementModel build_tcp_options(const std::string& id, const OptionsPolicy& policy);

// ---- Click subset ----

struct ClickOptions {
    /// IPRewriter: require IpSrc != IpDst on new inside flows.
    bool rewriter_guard = true;
};

/// IPMirror, DecIPTTL, HostEtherFilter(mac), IPClassifier(filter...),
/// IPRewriter, EtherEncap(proto, src, dst), Strip(14), EtherDecap,
/// SetIPChecksum, Paint(color), CheckPaint(color). Throws ModelError for
/// anything else.
ElementModel build_click_element(const std::string& id, const std::string& kind, const std::vector<std::string>& args,
                                 const ClickOptions& options = {});

bool is_supported_click_kind(const std::string& kind);

/// "aa:bb:cc:dd:ee:ff" -> 48-bit value.
std::optional<std::uint64_t> parse_mac(std::string_view text);
std::string format_mac(std::uint64_t mac);
std::optional<std::uint64_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint64_t ip);

} // namespace symnet
