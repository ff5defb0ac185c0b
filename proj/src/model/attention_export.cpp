#include "siamhan/model.hpp"

#include "json.hpp"

namespace siamhan {

AttentionDump attention_of(const EncoderTrace& trace, const KnowledgeGraph& graph) {
    AttentionDump dump;
    for (int p = 0; p < kMetaPathCount; ++p) {
        for (const auto& head : trace.heads[p]) {
            std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(trace.node_count));
            for (int u = 0; u < trace.node_count; ++u) {
                const auto& nb = graph.metapath_neighbors[p][u];
                for (std::size_t i = 0; i < nb.size(); ++i) {
                    rows[u].emplace_back(nb[i], head.alpha[u][i]);
                }
            }
            dump.alpha[p].push_back(std::move(rows));
        }
    }
    dump.beta = trace.semantic.beta;
    dump.gamma = trace.graph.gamma;
    return dump;
}

namespace {

nlohmann::json dump_json(const AttentionDump& dump, const KnowledgeGraph& graph) {
    using nlohmann::json;
    json alpha = json::object();
    for (int p = 0; p < kMetaPathCount; ++p) {
        json heads = json::array();
        for (const auto& rows : dump.alpha[p]) {
            json per_node = json::array();
            for (std::size_t u = 0; u < rows.size(); ++u) {
                json weights = json::array();
                for (auto [v, w] : rows[u]) {
                    weights.push_back({{"neighbor", v}, {"weight", w}});
                }
                per_node.push_back({{"node", u}, {"weights", std::move(weights)}});
            }
            heads.push_back(std::move(per_node));
        }
        alpha[to_string(static_cast<MetaPath>(p))] = std::move(heads);
    }
    json beta = json::object();
    for (int p = 0; p < kMetaPathCount; ++p) {
        beta[to_string(static_cast<MetaPath>(p))] = dump.beta(p);
    }
    json gamma = json::array();
    for (Eigen::Index u = 0; u < dump.gamma.size(); ++u) {
        gamma.push_back(dump.gamma(u));
    }
    return {{"graph", json::parse(graph_snapshot_json(graph))},
            {"alpha", std::move(alpha)},
            {"beta", std::move(beta)},
            {"gamma", std::move(gamma)}};
}

} // namespace

std::string export_attention(const ModelParams& params, const TrainConfig& config, const KnowledgeGraph& g1,
                             const KnowledgeGraph& g2) {
    EncoderTrace t1 = encode_trace(params, g1, config.leaky_relu_slope);
    EncoderTrace t2 = encode_trace(params, g2, config.leaky_relu_slope);
    const double d = distance(t1.embedding(), t2.embedding());
    nlohmann::json doc = {
        {"distance", d},
        {"eta", config.eta},
        {"verdict", verdict(d, config.eta)},
        {"first", dump_json(attention_of(t1, g1), g1)},
        {"second", dump_json(attention_of(t2, g2), g2)},
    };
    return doc.dump(2);
}

} // namespace siamhan
