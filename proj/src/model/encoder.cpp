#include "siamhan/model.hpp"

#include <algorithm>
#include <cmath>

namespace siamhan {

namespace {

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

Eigen::MatrixXd leaky(const Eigen::MatrixXd& m, double slope) {
    return m.unaryExpr([slope](double x) { return leaky(x, slope); });
}

// Softmax over a vector with the usual max shift.
template <typename Vec>
void softmax_inplace(Vec& v) {
    double top = v.maxCoeff();
    v = (v.array() - top).exp();
    v /= v.sum();
}

void softmax_inplace(std::vector<double>& v) {
    double top = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& x : v) {
        x = std::exp(x - top);
        sum += x;
    }
    for (auto& x : v) {
        x /= sum;
    }
}

// A node whose meta-path neighbor set is just itself gets alpha = 1 on every
// head, so its column of z is K stacked copies of leaky(h_u). Products with
// such columns go through the head-summed weight blocks instead.
bool self_only(const std::vector<int>& nb, int u) { return nb.size() == 1 && nb[0] == u; }

Eigen::MatrixXd head_sum(const Eigen::MatrixXd& w, int heads) {
    Eigen::MatrixXd out = w.leftCols(kHiddenDim);
    for (int k = 1; k < heads; ++k) {
        out += w.middleCols(k * kHiddenDim, kHiddenDim);
    }
    return out;
}

Eigen::VectorXd fold_heads(const Eigen::Ref<const Eigen::VectorXd>& v, int heads) {
    Eigen::VectorXd out = v.head(kHiddenDim);
    for (int k = 1; k < heads; ++k) {
        out += v.segment(k * kHiddenDim, kHiddenDim);
    }
    return out;
}

void add_to_every_head(Eigen::MatrixXd& w, const Eigen::MatrixXd& folded, int heads) {
    for (int k = 0; k < heads; ++k) {
        w.middleCols(k * kHiddenDim, kHiddenDim) += folded;
    }
}

struct Layout {
    // trivial[p][u]: node u is self-only on meta-path p.
    std::array<std::vector<char>, kMetaPathCount> trivial;
    std::vector<char> all_trivial;
    std::vector<int> folded_nodes;  // all_trivial
    std::vector<int> full_nodes;    // the rest
};

Layout layout_of(const KnowledgeGraph& graph, int n) {
    Layout l;
    l.all_trivial.assign(static_cast<std::size_t>(n), 1);
    for (int p = 0; p < kMetaPathCount; ++p) {
        l.trivial[p].resize(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u) {
            l.trivial[p][u] = self_only(graph.metapath_neighbors[p][u], u);
            l.all_trivial[u] = l.all_trivial[u] && l.trivial[p][u];
        }
    }
    for (int u = 0; u < n; ++u) {
        (l.all_trivial[u] ? l.folded_nodes : l.full_nodes).push_back(u);
    }
    return l;
}

} // namespace

NodeAttentionResult node_attention(const Eigen::MatrixXd& hidden, const std::vector<std::vector<int>>& neighbors,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& attention, double slope) {
    const auto n = hidden.cols();
    const auto dim = hidden.rows();
    Eigen::RowVectorXd left = attention.head(dim) * hidden;
    Eigen::RowVectorXd right = attention.tail(dim) * hidden;

    NodeAttentionResult r;
    r.alpha.resize(static_cast<std::size_t>(n));
    r.score.resize(static_cast<std::size_t>(n));
    r.aggregate = Eigen::MatrixXd::Zero(dim, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        const auto& nb = neighbors[static_cast<std::size_t>(u)];
        auto& score = r.score[u];
        auto& alpha = r.alpha[u];
        score.resize(nb.size());
        alpha.resize(nb.size());
        for (std::size_t i = 0; i < nb.size(); ++i) {
            score[i] = left(u) + right(nb[i]);
            alpha[i] = leaky(score[i], slope);
        }
        softmax_inplace(alpha);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            r.aggregate.col(u) += alpha[i] * hidden.col(nb[i]);
        }
    }
    r.output = leaky(r.aggregate, slope);
    return r;
}

SemanticAttentionResult semantic_attention(const std::array<Eigen::MatrixXd, kMetaPathCount>& z,
                                           const ModelParams& params) {
    SemanticAttentionResult r;
    const auto n = z[0].cols();
    for (int p = 0; p < kMetaPathCount; ++p) {
        Eigen::MatrixXd pre = params.semantic_weight * z[p];
        pre.colwise() += params.semantic_bias.col(0);
        r.activation[p] = pre.array().tanh().matrix();
        r.importance(p) = (params.semantic_vector.transpose() * r.activation[p]).sum() / static_cast<double>(n);
    }
    r.beta = r.importance;
    softmax_inplace(r.beta);
    r.output = r.beta(0) * z[0] + r.beta(1) * z[1] + r.beta(2) * z[2];
    return r;
}

GraphAttentionResult graph_attention(const Eigen::MatrixXd& s, const ModelParams& params) {
    GraphAttentionResult r;
    Eigen::MatrixXd pre = params.graph_weight * s;
    pre.colwise() += params.graph_bias.col(0);
    r.activation = pre.array().tanh().matrix();
    r.score = (params.graph_vector.transpose() * r.activation).transpose();
    r.gamma = r.score;
    softmax_inplace(r.gamma);
    r.embedding = s * r.gamma;
    return r;
}

EncoderTrace encode_trace(const ModelParams& params, const KnowledgeGraph& graph, double slope) {
    EncoderTrace t;
    const int n = graph.real_node_count();
    t.node_count = n;
    t.hidden.resize(kHiddenDim, n);
    for (int u = 0; u < n; ++u) {
        const int kind = static_cast<int>(graph.nodes[u].kind);
        t.hidden.col(u) = params.proj_weight[kind] * graph.features.row(u).transpose() + params.proj_bias[kind];
    }
    for (int p = 0; p < kMetaPathCount; ++p) {
        t.z[p].resize(params.embedding_dim(), n);
        t.heads[p].reserve(static_cast<std::size_t>(params.heads));
        for (int k = 0; k < params.heads; ++k) {
            t.heads[p].push_back(node_attention(t.hidden, graph.metapath_neighbors[p],
                                                params.node_attention[p].row(k), slope));
            t.z[p].middleRows(k * kHiddenDim, kHiddenDim) = t.heads[p].back().output;
        }
    }
    const Layout l = layout_of(graph, n);
    const Eigen::MatrixXd act_hidden = leaky(t.hidden, slope);
    const int heads = params.heads;

    auto& sa = t.semantic;
    Eigen::MatrixXd folded_s = head_sum(params.semantic_weight, heads) * act_hidden;
    folded_s.colwise() += params.semantic_bias.col(0);
    const Eigen::MatrixXd folded_act = folded_s.array().tanh().matrix();
    for (int p = 0; p < kMetaPathCount; ++p) {
        sa.activation[p] = folded_act;
        for (int u = 0; u < n; ++u) {
            if (!l.trivial[p][u]) {
                Eigen::VectorXd pre = params.semantic_weight * t.z[p].col(u) + params.semantic_bias.col(0);
                sa.activation[p].col(u) = pre.array().tanh().matrix();
            }
        }
        sa.importance(p) = (params.semantic_vector.transpose() * sa.activation[p]).sum() / static_cast<double>(n);
    }
    sa.beta = sa.importance;
    softmax_inplace(sa.beta);
    sa.output = sa.beta(0) * t.z[0] + sa.beta(1) * t.z[1] + sa.beta(2) * t.z[2];

    auto& ga = t.graph;
    const double beta_sum = sa.beta.sum();
    Eigen::MatrixXd pre = head_sum(params.graph_weight, heads) * act_hidden * beta_sum;
    for (int u : l.full_nodes) {
        pre.col(u).noalias() = params.graph_weight * sa.output.col(u);
    }
    pre.colwise() += params.graph_bias.col(0);
    ga.activation = pre.array().tanh().matrix();
    ga.score = (params.graph_vector.transpose() * ga.activation).transpose();
    ga.gamma = ga.score;
    softmax_inplace(ga.gamma);
    ga.embedding = sa.output * ga.gamma;
    return t;
}

Eigen::VectorXd encode(const ModelParams& params, const KnowledgeGraph& graph, double slope) {
    return encode_trace(params, graph, slope).graph.embedding;
}

void backpropagate(const ModelParams& params, const KnowledgeGraph& graph, const EncoderTrace& t,
                   const Eigen::VectorXd& d_embedding, double slope, ModelParams& grad) {
    const int n = t.node_count;
    const Eigen::MatrixXd& s = t.semantic.output;

    const Layout l = layout_of(graph, n);
    const int heads = params.heads;
    const Eigen::MatrixXd act_hidden = leaky(t.hidden, slope);
    const Eigen::MatrixXd act_grad =
        t.hidden.unaryExpr([slope](double x) { return leaky_grad(x, slope); });

    // Graph level: Z = Σ γ_u s_u, γ = softmax(q·tanh(W_g s + b_g)).
    // Columns of folded nodes are carried as head sums (r) from here on.
    const auto& ga = t.graph;
    const auto& sa = t.semantic;
    const double beta_sum = sa.beta.sum();
    Eigen::VectorXd d_gamma = s.transpose() * d_embedding;
    Eigen::VectorXd d_score = ga.gamma.array() * (d_gamma.array() - ga.gamma.dot(d_gamma));
    grad.graph_vector.col(0) += ga.activation * d_score;
    Eigen::MatrixXd d_pre = (params.graph_vector.col(0) * d_score.transpose()).array() *
                            (1.0 - ga.activation.array().square());
    grad.graph_bias.col(0) += d_pre.rowwise().sum();

    const Eigen::MatrixXd g_folded = head_sum(params.graph_weight, heads);
    const Eigen::VectorXd d_embedding_folded = fold_heads(d_embedding, heads);
    Eigen::MatrixXd d_s = Eigen::MatrixXd::Zero(s.rows(), n);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(kHiddenDim, n);
    {
        const auto& fn = l.folded_nodes;
        Eigen::MatrixXd d_pre_f = d_pre(Eigen::all, fn);
        add_to_every_head(grad.graph_weight, d_pre_f * (beta_sum * act_hidden(Eigen::all, fn)).transpose(), heads);
        Eigen::MatrixXd r_f = g_folded.transpose() * d_pre_f;
        for (std::size_t i = 0; i < fn.size(); ++i) {
            r.col(fn[i]) = ga.gamma(fn[i]) * d_embedding_folded + r_f.col(static_cast<Eigen::Index>(i));
        }
    }
    if (!l.full_nodes.empty()) {
        const auto& fu = l.full_nodes;
        Eigen::MatrixXd d_pre_u = d_pre(Eigen::all, fu);
        grad.graph_weight.noalias() += d_pre_u * s(Eigen::all, fu).transpose();
        Eigen::MatrixXd back = params.graph_weight.transpose() * d_pre_u;
        for (std::size_t i = 0; i < fu.size(); ++i) {
            d_s.col(fu[i]) = ga.gamma(fu[i]) * d_embedding + back.col(static_cast<Eigen::Index>(i));
        }
    }

    // Semantic level: s = Σ β_Φ z_Φ, β = softmax(mean_u p·tanh(W_s z_u + b_s)).
    Eigen::Vector3d d_beta = Eigen::Vector3d::Zero();
    for (int p = 0; p < kMetaPathCount; ++p) {
        for (int u : l.full_nodes) {
            d_beta(p) += d_s.col(u).dot(t.z[p].col(u));
        }
        for (int u : l.folded_nodes) {
            d_beta(p) += r.col(u).dot(act_hidden.col(u));
        }
    }
    Eigen::Vector3d d_importance = sa.beta.array() * (d_beta.array() - sa.beta.dot(d_beta));
    const Eigen::MatrixXd s_folded = head_sum(params.semantic_weight, heads);
    std::array<Eigen::MatrixXd, kMetaPathCount> d_z;
    Eigen::MatrixXd d_hidden = Eigen::MatrixXd::Zero(kHiddenDim, n);
    // Folded columns of every path share the head-summed weights, so their
    // pre-activation gradients are summed over paths before the products.
    Eigen::MatrixXd d_pre_folded = Eigen::MatrixXd::Zero(kAttentionDim, n);
    Eigen::MatrixXd d_direct = Eigen::MatrixXd::Zero(kHiddenDim, n);
    for (int p = 0; p < kMetaPathCount; ++p) {
        const double scale = d_importance(p) / static_cast<double>(n);
        const Eigen::MatrixXd& act = sa.activation[p];
        grad.semantic_vector.col(0) += scale * act.rowwise().sum();
        Eigen::MatrixXd d_pre_s = (scale * params.semantic_vector.col(0)).replicate(1, n).array() *
                                  (1.0 - act.array().square());
        grad.semantic_bias.col(0) += d_pre_s.rowwise().sum();
        d_z[p] = Eigen::MatrixXd::Zero(s.rows(), n);

        std::vector<int> real_nodes;
        for (int u = 0; u < n; ++u) {
            if (l.trivial[p][u]) {
                d_pre_folded.col(u) += d_pre_s.col(u);
                d_direct.col(u) += sa.beta(p) * (l.all_trivial[u] ? Eigen::VectorXd(r.col(u)) : fold_heads(d_s.col(u), heads));
            } else {
                real_nodes.push_back(u);
            }
        }
        if (!real_nodes.empty()) {
            Eigen::MatrixXd d_pre_r = d_pre_s(Eigen::all, real_nodes);
            grad.semantic_weight.noalias() += d_pre_r * t.z[p](Eigen::all, real_nodes).transpose();
            Eigen::MatrixXd back = params.semantic_weight.transpose() * d_pre_r;
            for (std::size_t i = 0; i < real_nodes.size(); ++i) {
                const int u = real_nodes[i];
                d_z[p].col(u) = sa.beta(p) * d_s.col(u) + back.col(static_cast<Eigen::Index>(i));
            }
        }
    }
    add_to_every_head(grad.semantic_weight, d_pre_folded * act_hidden.transpose(), heads);
    // Self-only attention: aggregate = h_u and the softmax has no gradient.
    d_direct.noalias() += s_folded.transpose() * d_pre_folded;
    d_hidden += d_direct.cwiseProduct(act_grad);

    // Node level, per meta-path and head, for nodes with real neighbor sets.
    for (int p = 0; p < kMetaPathCount; ++p) {
        const auto& nbrs = graph.metapath_neighbors[p];
        for (int k = 0; k < params.heads; ++k) {
            const auto& na = t.heads[p][k];
            const auto a_left = params.node_attention[p].row(k).head(kHiddenDim).transpose();
            const auto a_right = params.node_attention[p].row(k).tail(kHiddenDim).transpose();
            Eigen::MatrixXd d_agg = d_z[p].middleRows(k * kHiddenDim, kHiddenDim).array() *
                                    na.aggregate.unaryExpr([slope](double x) { return leaky_grad(x, slope); }).array();
            Eigen::VectorXd d_left = Eigen::VectorXd::Zero(kHiddenDim);
            Eigen::VectorXd d_right = Eigen::VectorXd::Zero(kHiddenDim);
            for (int u = 0; u < n; ++u) {
                if (l.trivial[p][u]) {
                    continue;
                }
                const auto& nb = nbrs[u];
                const auto& alpha = na.alpha[u];
                std::vector<double> d_alpha(nb.size());
                double weighted = 0.0;
                for (std::size_t i = 0; i < nb.size(); ++i) {
                    d_alpha[i] = d_agg.col(u).dot(t.hidden.col(nb[i]));
                    d_hidden.col(nb[i]) += alpha[i] * d_agg.col(u);
                    weighted += alpha[i] * d_alpha[i];
                }
                double d_score_left = 0.0;
                for (std::size_t i = 0; i < nb.size(); ++i) {
                    double d_e = alpha[i] * (d_alpha[i] - weighted);
                    double d_sc = d_e * leaky_grad(na.score[u][i], slope);
                    d_score_left += d_sc;
                    d_right += d_sc * t.hidden.col(nb[i]);
                    d_hidden.col(nb[i]) += d_sc * a_right;
                }
                d_left += d_score_left * t.hidden.col(u);
                d_hidden.col(u) += d_score_left * a_left;
            }
            grad.node_attention[p].row(k).head(kHiddenDim) += d_left.transpose();
            grad.node_attention[p].row(k).tail(kHiddenDim) += d_right.transpose();
        }
    }

    // Type-specific projection h_u = W_t x_u + b_t.
    for (int u = 0; u < n; ++u) {
        const int kind = static_cast<int>(graph.nodes[u].kind);
        grad.proj_weight[kind] += d_hidden.col(u) * graph.features.row(u);
        grad.proj_bias[kind].col(0) += d_hidden.col(u);
    }
}

} // namespace siamhan
