#pragma once

#include "siamhan/ingest.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace siamhan {

inline constexpr int kMaxNodes = 50;
inline constexpr int kAttributeLength = 50;

enum class NodeKind : std::uint8_t { client = 0, server, client_fingerprint, server_fingerprint };
inline constexpr int kNodeKindCount = 4;

const char* to_string(NodeKind kind);

/// Meta-paths in the order used throughout the model: FCF, FSF, SCS.
enum class MetaPath : std::uint8_t { fcf = 0, fsf, scs };
inline constexpr int kMetaPathCount = 3;

const char* to_string(MetaPath path);

/// Fingerprint labels F1..F13 (1-based, matching the TLS field table).
namespace label {
inline constexpr int record_version = 1;
inline constexpr int client_version = 2;
inline constexpr int cipher_suites = 3;
inline constexpr int compression = 4;
inline constexpr int sni = 5;
inline constexpr int server_record_version = 6;
inline constexpr int server_version = 7;
inline constexpr int chosen_cipher = 8;
inline constexpr int algorithm_id = 9;
inline constexpr int issuer = 10;
inline constexpr int subject = 11;
inline constexpr int first_connection = 12;
inline constexpr int flow_count = 13;
} // namespace label

struct GraphNode {
    NodeKind kind = NodeKind::client;
    int label = 0;  // 0 for client and server nodes, else the F-label
    std::string attribute;
    int parent = -1;  // client for servers and client fingerprints, owning server for server fingerprints

    bool operator==(const GraphNode&) const = default;
};

enum class GraphErrc { empty_input, mixed_clients, bad_snapshot };

class GraphError : public std::runtime_error {
public:
    GraphError(GraphErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    GraphErrc code() const noexcept { return code_; }

private:
    GraphErrc code_;
};

/// Heterogeneous knowledge graph of one client address.
///
/// `nodes` is a tree rooted at the client node (index 0); every edge joins a
/// node to its parent. Once finalized (see truncate_and_order) the graph has
/// at most kMaxNodes nodes and the matrices are kMaxNodes x kMaxNodes with
/// zero padding beyond the real nodes.
struct KnowledgeGraph {
    Ipv6Address client;
    std::vector<GraphNode> nodes;
    Eigen::MatrixXd adjacency;
    Eigen::MatrixXd features;
    /// metapath_neighbors[path][u]: sorted neighbor indices of u, u included.
    std::array<std::vector<std::vector<int>>, kMetaPathCount> metapath_neighbors;

    int real_node_count() const { return static_cast<int>(nodes.size()); }
    std::vector<std::pair<int, int>> edges() const;
    const std::vector<int>& neighbors(MetaPath path, int u) const {
        return metapath_neighbors[static_cast<int>(path)][static_cast<std::size_t>(u)];
    }
};

/// Canonical attribute strings.
std::string code_attribute(std::uint16_t code);
std::string code_list_attribute(std::span<const std::uint16_t> codes);
std::string code_list_attribute(std::span<const std::uint8_t> codes);

/// Untruncated node set for one client address, in construction order, with
/// no matrices. Records outside the window are ignored.
KnowledgeGraph collect_nodes(std::span<const SessionRecord> records, const WiretapWindow& window);

/// Reorders nodes (client, client fingerprints by label, servers by
/// descending flow count each followed by its fingerprints), drops nodes
/// beyond kMaxNodes and rebuilds adjacency and meta-path neighbor sets.
/// Features are re-encoded.
KnowledgeGraph truncate_and_order(KnowledgeGraph graph);

/// Row u holds the code points of node u's attribute, zero padded or cut to
/// kAttributeLength, divided by the row sum.
Eigen::MatrixXd encode_features(const KnowledgeGraph& graph);

/// collect_nodes followed by truncate_and_order.
KnowledgeGraph build_graph(std::span<const SessionRecord> records, const WiretapWindow& window);

/// One graph per client address seen in the window, ordered by address.
std::vector<KnowledgeGraph> build_graphs(std::span<const SessionRecord> records, const WiretapWindow& window);

std::map<Ipv6Address, std::vector<SessionRecord>> group_by_client(std::span<const SessionRecord> records);

// Snapshot files: a JSON array of graphs with nodes, edges and X.

std::string graph_snapshot_json(const KnowledgeGraph& graph, int indent = -1);
void write_graph_snapshots(const std::filesystem::path& path, std::span<const KnowledgeGraph> graphs);
std::vector<KnowledgeGraph> read_graph_snapshots(const std::filesystem::path& path);

} // namespace siamhan
