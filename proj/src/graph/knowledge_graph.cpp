#include "siamhan/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

namespace siamhan {

const char* to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::client: return "client";
    case NodeKind::server: return "server";
    case NodeKind::client_fingerprint: return "client_fingerprint";
    case NodeKind::server_fingerprint: return "server_fingerprint";
    }
    return "?";
}

const char* to_string(MetaPath path) {
    switch (path) {
    case MetaPath::fcf: return "FCF";
    case MetaPath::fsf: return "FSF";
    case MetaPath::scs: return "SCS";
    }
    return "?";
}

std::vector<std::pair<int, int>> KnowledgeGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < real_node_count(); ++u) {
        if (nodes[u].parent >= 0) {
            out.emplace_back(nodes[u].parent, u);
        }
    }
    return out;
}

std::string code_attribute(std::uint16_t code) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04x", code);
    return buf;
}

std::string code_list_attribute(std::span<const std::uint16_t> codes) {
    std::string out;
    for (auto c : codes) {
        if (!out.empty()) {
            out += '-';
        }
        out += code_attribute(c);
    }
    return out;
}

std::string code_list_attribute(std::span<const std::uint8_t> codes) {
    std::string out;
    char buf[4];
    for (auto c : codes) {
        if (!out.empty()) {
            out += '-';
        }
        std::snprintf(buf, sizeof(buf), "%02x", c);
        out += buf;
    }
    return out;
}

namespace {

using Fingerprint = std::pair<int, std::string>;  // (label, attribute)

struct ServerAccumulator {
    std::int64_t first_seen = 0;
    std::int64_t flows = 0;
    std::set<Fingerprint> fingerprints;
};

std::int64_t day_index(std::int64_t ts) {
    std::int64_t d = ts / 86400;
    if (ts % 86400 < 0) {
        --d;
    }
    return d;
}

std::int64_t flow_count_of(const KnowledgeGraph& g, int server) {
    for (const auto& n : g.nodes) {
        if (n.kind == NodeKind::server_fingerprint && n.parent == server && n.label == label::flow_count) {
            return std::stoll(n.attribute);
        }
    }
    return 0;
}

void finalize_structure(KnowledgeGraph& g) {
    const int n = g.real_node_count();
    g.adjacency = Eigen::MatrixXd::Zero(kMaxNodes, kMaxNodes);
    for (int u = 0; u < n; ++u) {
        g.adjacency(u, u) = 1.0;
        if (int p = g.nodes[u].parent; p >= 0) {
            g.adjacency(u, p) = 1.0;
            g.adjacency(p, u) = 1.0;
        }
    }
    for (auto& per_node : g.metapath_neighbors) {
        per_node.assign(static_cast<std::size_t>(n), {});
        for (int u = 0; u < n; ++u) {
            per_node[u].push_back(u);
        }
    }
    auto& fcf = g.metapath_neighbors[static_cast<int>(MetaPath::fcf)];
    auto& fsf = g.metapath_neighbors[static_cast<int>(MetaPath::fsf)];
    auto& scs = g.metapath_neighbors[static_cast<int>(MetaPath::scs)];
    for (int u = 0; u < n; ++u) {
        const auto& node = g.nodes[u];
        switch (node.kind) {
        case NodeKind::client_fingerprint: fcf[node.parent].push_back(u); break;
        case NodeKind::server: scs[node.parent].push_back(u); break;
        case NodeKind::server_fingerprint: fsf[node.parent].push_back(u); break;
        case NodeKind::client: break;
        }
    }
    for (auto& per_node : g.metapath_neighbors) {
        for (auto& set : per_node) {
            std::sort(set.begin(), set.end());
        }
    }
    g.features = encode_features(g);
}

// Decodes UTF-8 leniently: an invalid sequence yields its lead byte value.
std::vector<std::uint32_t> code_points(const std::string& s) {
    std::vector<std::uint32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = static_cast<std::uint8_t>(s[i]);
        int extra = b < 0x80 ? 0 : (b >> 5) == 0x6 ? 1 : (b >> 4) == 0xe ? 2 : (b >> 3) == 0x1e ? 3 : -1;
        std::uint32_t cp = extra == 0 ? b : extra == 1 ? (b & 0x1f) : extra == 2 ? (b & 0x0f) : (b & 0x07);
        bool ok = extra >= 0 && i + static_cast<std::size_t>(extra) < s.size();
        for (int k = 1; ok && k <= extra; ++k) {
            auto c = static_cast<std::uint8_t>(s[i + k]);
            if ((c >> 6) != 0x2) {
                ok = false;
            } else {
                cp = (cp << 6) | (c & 0x3f);
            }
        }
        if (!ok) {
            out.push_back(b);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

} // namespace

KnowledgeGraph collect_nodes(std::span<const SessionRecord> records, const WiretapWindow& window) {
    std::optional<Ipv6Address> client;
    std::set<Fingerprint> client_fps;
    std::map<Ipv6Address, ServerAccumulator> servers;

    for (const auto& r : records) {
        if (client && r.client_addr != *client) {
            throw GraphError(GraphErrc::mixed_clients, "records belong to more than one client address");
        }
        client = r.client_addr;
        if (!window.contains(r.timestamp)) {
            continue;
        }

        if (r.has_client_hello()) {
            client_fps.emplace(label::record_version, code_attribute(*r.record_version));
            client_fps.emplace(label::client_version, code_attribute(*r.client_version));
            client_fps.emplace(label::cipher_suites, code_list_attribute(r.cipher_suites));
            client_fps.emplace(label::compression, code_list_attribute(r.compression));
        }

        auto [it, fresh] = servers.try_emplace(r.server_addr);
        auto& acc = it->second;
        acc.first_seen = fresh ? r.timestamp : std::min(acc.first_seen, r.timestamp);
        ++acc.flows;
        if (r.sni) {
            acc.fingerprints.emplace(label::sni, *r.sni);
        }
        if (r.has_server_hello()) {
            acc.fingerprints.emplace(label::server_record_version, code_attribute(*r.server_record_version));
            acc.fingerprints.emplace(label::server_version, code_attribute(*r.server_version));
            acc.fingerprints.emplace(label::chosen_cipher, code_attribute(*r.chosen_cipher));
        }
        if (r.has_certificate()) {
            acc.fingerprints.emplace(label::algorithm_id, *r.cert_algorithm_id);
            acc.fingerprints.emplace(label::issuer, *r.issuer);
            acc.fingerprints.emplace(label::subject, *r.subject);
        }
    }
    if (servers.empty()) {
        throw GraphError(GraphErrc::empty_input, "no session records inside the wiretap window");
    }

    KnowledgeGraph g;
    g.client = *client;
    g.nodes.push_back({NodeKind::client, 0, client->to_hex(), -1});
    for (const auto& [lbl, attr] : client_fps) {
        g.nodes.push_back({NodeKind::client_fingerprint, lbl, attr, 0});
    }
    for (const auto& [addr, acc] : servers) {
        int s = g.real_node_count();
        g.nodes.push_back({NodeKind::server, 0, addr.to_hex(), 0});
        for (const auto& [lbl, attr] : acc.fingerprints) {
            g.nodes.push_back({NodeKind::server_fingerprint, lbl, attr, s});
        }
        g.nodes.push_back(
            {NodeKind::server_fingerprint, label::first_connection, std::to_string(day_index(acc.first_seen)), s});
        g.nodes.push_back({NodeKind::server_fingerprint, label::flow_count, std::to_string(acc.flows), s});
    }
    return g;
}

KnowledgeGraph truncate_and_order(KnowledgeGraph g) {
    const int n = g.real_node_count();
    auto by_label = [&](int a, int b) {
        return std::tie(g.nodes[a].label, g.nodes[a].attribute) < std::tie(g.nodes[b].label, g.nodes[b].attribute);
    };

    int client = -1;
    std::vector<int> client_fps;
    std::vector<int> servers;
    std::map<int, std::vector<int>> server_fps;
    for (int u = 0; u < n; ++u) {
        switch (g.nodes[u].kind) {
        case NodeKind::client: client = u; break;
        case NodeKind::client_fingerprint: client_fps.push_back(u); break;
        case NodeKind::server: servers.push_back(u); break;
        case NodeKind::server_fingerprint: server_fps[g.nodes[u].parent].push_back(u); break;
        }
    }
    if (client < 0) {
        throw GraphError(GraphErrc::empty_input, "graph has no client node");
    }

    std::sort(client_fps.begin(), client_fps.end(), by_label);
    std::map<int, std::int64_t> flows;
    for (int s : servers) {
        flows[s] = flow_count_of(g, s);
    }
    std::sort(servers.begin(), servers.end(), [&](int a, int b) {
        if (flows[a] != flows[b]) {
            return flows[a] > flows[b];
        }
        return g.nodes[a].attribute < g.nodes[b].attribute;
    });

    std::vector<int> order{client};
    order.insert(order.end(), client_fps.begin(), client_fps.end());
    for (int s : servers) {
        order.push_back(s);
        auto& fps = server_fps[s];
        std::sort(fps.begin(), fps.end(), by_label);
        order.insert(order.end(), fps.begin(), fps.end());
    }
    if (order.size() > static_cast<std::size_t>(kMaxNodes)) {
        order.resize(kMaxNodes);
    }

    std::vector<int> new_index(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        new_index[order[i]] = static_cast<int>(i);
    }
    std::vector<GraphNode> nodes;
    nodes.reserve(order.size());
    for (int old : order) {
        GraphNode node = g.nodes[old];
        node.parent = node.parent >= 0 ? new_index[node.parent] : -1;
        nodes.push_back(std::move(node));
    }
    g.nodes = std::move(nodes);
    finalize_structure(g);
    return g;
}

Eigen::MatrixXd encode_features(const KnowledgeGraph& g) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(kMaxNodes, kAttributeLength);
    const int n = std::min(g.real_node_count(), kMaxNodes);
    for (int u = 0; u < n; ++u) {
        auto cps = code_points(g.nodes[u].attribute);
        const int len = std::min<int>(static_cast<int>(cps.size()), kAttributeLength);
        double sum = 0.0;
        for (int k = 0; k < len; ++k) {
            x(u, k) = static_cast<double>(cps[k]);
            sum += x(u, k);
        }
        if (sum > 0.0) {
            x.row(u) /= sum;
        }
    }
    return x;
}

KnowledgeGraph build_graph(std::span<const SessionRecord> records, const WiretapWindow& window) {
    if (records.empty()) {
        throw GraphError(GraphErrc::empty_input, "no session records");
    }
    return truncate_and_order(collect_nodes(records, window));
}

std::map<Ipv6Address, std::vector<SessionRecord>> group_by_client(std::span<const SessionRecord> records) {
    std::map<Ipv6Address, std::vector<SessionRecord>> out;
    for (const auto& r : records) {
        out[r.client_addr].push_back(r);
    }
    return out;
}

std::vector<KnowledgeGraph> build_graphs(std::span<const SessionRecord> records, const WiretapWindow& window) {
    std::vector<KnowledgeGraph> graphs;
    for (const auto& [addr, recs] : group_by_client(records)) {
        bool any = std::any_of(recs.begin(), recs.end(),
                               [&](const SessionRecord& r) { return window.contains(r.timestamp); });
        if (any) {
            graphs.push_back(build_graph(recs, window));
        }
    }
    return graphs;
}

} // namespace siamhan
