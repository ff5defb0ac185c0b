#include "siamhan/graph.hpp"

#include "json.hpp"

#include <fstream>

namespace siamhan {

namespace {

using nlohmann::json;

NodeKind kind_from_string(const std::string& s) {
    for (int k = 0; k < kNodeKindCount; ++k) {
        if (s == to_string(static_cast<NodeKind>(k))) {
            return static_cast<NodeKind>(k);
        }
    }
    throw GraphError(GraphErrc::bad_snapshot, "unknown node kind " + s);
}

json to_json(const KnowledgeGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back({{"kind", to_string(n.kind)}, {"label", n.label}, {"attribute", n.attribute},
                         {"parent", n.parent}});
    }
    json edges = json::array();
    for (auto [a, b] : g.edges()) {
        edges.push_back({a, b});
    }
    json features = json::array();
    for (int u = 0; u < g.features.rows(); ++u) {
        json row = json::array();
        for (int k = 0; k < g.features.cols(); ++k) {
            row.push_back(g.features(u, k));
        }
        features.push_back(std::move(row));
    }
    return {{"client", g.client.to_string()},
            {"real_node_count", g.real_node_count()},
            {"nodes", std::move(nodes)},
            {"edges", std::move(edges)},
            {"features", std::move(features)}};
}

} // namespace

std::string graph_snapshot_json(const KnowledgeGraph& graph, int indent) {
    return to_json(graph).dump(indent);
}

void write_graph_snapshots(const std::filesystem::path& path, std::span<const KnowledgeGraph> graphs) {
    json out = json::array();
    for (const auto& g : graphs) {
        out.push_back(to_json(g));
    }
    std::ofstream f(path);
    if (!f) {
        throw GraphError(GraphErrc::bad_snapshot, "cannot write " + path.string());
    }
    f << out.dump() << '\n';
}

std::vector<KnowledgeGraph> read_graph_snapshots(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw GraphError(GraphErrc::bad_snapshot, "cannot open " + path.string());
    }
    json doc = json::parse(f, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw GraphError(GraphErrc::bad_snapshot, path.string() + " is not a graph snapshot array");
    }
    std::vector<KnowledgeGraph> graphs;
    try {
        for (const auto& jg : doc) {
            KnowledgeGraph g;
            auto addr = Ipv6Address::parse(jg.at("client").get<std::string>());
            if (!addr) {
                throw GraphError(GraphErrc::bad_snapshot, "bad client address in snapshot");
            }
            g.client = *addr;
            for (const auto& jn : jg.at("nodes")) {
                g.nodes.push_back({kind_from_string(jn.at("kind").get<std::string>()), jn.at("label").get<int>(),
                                   jn.at("attribute").get<std::string>(), jn.at("parent").get<int>()});
            }
            for (const auto& n : g.nodes) {
                if (n.parent >= g.real_node_count()) {
                    throw GraphError(GraphErrc::bad_snapshot, "node parent out of range");
                }
            }
            graphs.push_back(truncate_and_order(std::move(g)));
        }
    } catch (const json::exception& e) {
        throw GraphError(GraphErrc::bad_snapshot, std::string("malformed snapshot: ") + e.what());
    }
    return graphs;
}

} // namespace siamhan
