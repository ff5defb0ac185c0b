#pragma once

#include "siamhan/graph.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace siamhan {

inline constexpr int kHiddenDim = 50;      // F', width of each projected node feature
inline constexpr int kAttentionDim = 128;  // rows of W_s / W_g, length of p / q

enum class ModelErrc { divergence, grad_mismatch, bad_checkpoint, bad_config };

class ModelError : public std::runtime_error {
public:
    ModelError(ModelErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ModelErrc code() const noexcept { return code_; }

private:
    ModelErrc code_;
};

struct TrainConfig {
    double learning_rate = 0.005;
    double weight_decay = 0.001;
    int heads = 4;
    double margin = 20.0;
    double eta = 10.0;
    double leaky_relu_slope = 0.2;
    int patience = 100;
    int max_epochs = 300;
    int batch_size = 32;
    std::uint64_t rng_seed = 1;
    /// Bound of the uniform initializer; 0 selects a per-tensor Glorot bound.
    double init_scale = 0.05;

    /// Throws ModelError(bad_config) unless margin > eta > 0, heads >= 1, etc.
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Every learnable tensor of the encoder. Vectors are stored as n x 1
/// matrices so all tensors can be visited uniformly. The same struct doubles
/// as a gradient accumulator.
struct ModelParams {
    int heads = 4;
    std::array<Eigen::MatrixXd, kNodeKindCount> proj_weight;      // F' x kAttributeLength per node kind
    std::array<Eigen::MatrixXd, kNodeKindCount> proj_bias;        // F' x 1
    std::array<Eigen::MatrixXd, kMetaPathCount> node_attention;   // heads x 2F', row k = a_Φ of head k
    Eigen::MatrixXd semantic_weight;                              // 128 x heads*F'
    Eigen::MatrixXd semantic_bias;                                // 128 x 1
    Eigen::MatrixXd semantic_vector;                              // 128 x 1 (p)
    Eigen::MatrixXd graph_weight;                                 // 128 x heads*F'
    Eigen::MatrixXd graph_bias;                                   // 128 x 1
    Eigen::MatrixXd graph_vector;                                 // 128 x 1 (q)

    static ModelParams zeros(int heads);
    /// Uniform(-b, b) entries from a seeded generator, b = scale. With scale 0
    /// weights and attention vectors use b = sqrt(6 / (fan_in + fan_out)) and
    /// biases start at zero.
    static ModelParams random(int heads, std::uint64_t seed, double scale = 0.0);

    int embedding_dim() const { return heads * kHiddenDim; }

    /// f(name, tensor) over every tensor in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        for_each_impl(*this, f);
    }
    template <typename F>
    void for_each(F&& f) const {
        for_each_impl(*this, f);
    }

    std::size_t parameter_count() const;
    double squared_norm() const;
    bool operator==(const ModelParams& other) const;

private:
    template <typename Self, typename F>
    static void for_each_impl(Self& self, F& f) {
        static const char* kind_names[] = {"client", "server", "client_fp", "server_fp"};
        for (int k = 0; k < kNodeKindCount; ++k) {
            f(std::string("proj.") + kind_names[k] + ".weight", self.proj_weight[k]);
            f(std::string("proj.") + kind_names[k] + ".bias", self.proj_bias[k]);
        }
        for (int p = 0; p < kMetaPathCount; ++p) {
            f(std::string("node_attention.") + to_string(static_cast<MetaPath>(p)), self.node_attention[p]);
        }
        f(std::string("semantic.weight"), self.semantic_weight);
        f(std::string("semantic.bias"), self.semantic_bias);
        f(std::string("semantic.p"), self.semantic_vector);
        f(std::string("graph.weight"), self.graph_weight);
        f(std::string("graph.bias"), self.graph_bias);
        f(std::string("graph.q"), self.graph_vector);
    }
};

// ---------------------------------------------------------------------------
// The three attention levels. Each works on column-major per-node matrices
// (one column per real node).

struct NodeAttentionResult {
    std::vector<std::vector<double>> alpha;  // alpha[u][i] for the i-th neighbor of u
    std::vector<std::vector<double>> score;  // a_Φ·[h_u||h_v] before LeakyReLU
    Eigen::MatrixXd aggregate;               // F' x n, Σ_v α_uv h_v
    Eigen::MatrixXd output;                  // F' x n, LeakyReLU(aggregate)
};

/// One head of node-level attention over the given neighbor sets.
NodeAttentionResult node_attention(const Eigen::MatrixXd& hidden, const std::vector<std::vector<int>>& neighbors,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& attention, double slope);

struct SemanticAttentionResult {
    std::array<Eigen::MatrixXd, kMetaPathCount> activation;  // tanh(W_s z + b_s), 128 x n
    Eigen::Vector3d importance;                              // w_Φ
    Eigen::Vector3d beta;
    Eigen::MatrixXd output;                                  // s, H x n
};

SemanticAttentionResult semantic_attention(const std::array<Eigen::MatrixXd, kMetaPathCount>& z,
                                           const ModelParams& params);

struct GraphAttentionResult {
    Eigen::MatrixXd activation;  // tanh(W_g s + b_g), 128 x n
    Eigen::VectorXd score;       // g_u
    Eigen::VectorXd gamma;
    Eigen::VectorXd embedding;   // Z
};

GraphAttentionResult graph_attention(const Eigen::MatrixXd& s, const ModelParams& params);

/// All forward intermediates of one graph, kept for backpropagation.
struct EncoderTrace {
    int node_count = 0;
    Eigen::MatrixXd hidden;  // F' x n
    std::array<std::vector<NodeAttentionResult>, kMetaPathCount> heads;  // [path][head]
    std::array<Eigen::MatrixXd, kMetaPathCount> z;                       // H x n
    SemanticAttentionResult semantic;
    GraphAttentionResult graph;

    const Eigen::VectorXd& embedding() const { return graph.embedding; }
};

EncoderTrace encode_trace(const ModelParams& params, const KnowledgeGraph& graph, double slope);
Eigen::VectorXd encode(const ModelParams& params, const KnowledgeGraph& graph, double slope);

/// Accumulates dLoss/dparams into `grad` given dLoss/dZ for this graph.
void backpropagate(const ModelParams& params, const KnowledgeGraph& graph, const EncoderTrace& trace,
                   const Eigen::VectorXd& d_embedding, double slope, ModelParams& grad);

// ---------------------------------------------------------------------------
// Siamese head.

double distance(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2);
/// 1 iff d < eta.
int verdict(double d, double eta);
double contrastive_loss(double d, int label, double margin);

struct PairGradient {
    double loss = 0.0;
    double distance = 0.0;
    ModelParams grad;
};

/// Contrastive loss of one labeled pair and its exact gradient (no weight decay).
PairGradient pair_gradient(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                           double margin, double slope);

/// Loss of one pair, forward only.
double pair_loss(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                 double margin, double slope);

// ---------------------------------------------------------------------------
// Gradient check.

struct TensorCheck {
    std::string name;
    double max_relative_error = 0.0;
    std::size_t entries_checked = 0;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    double max_relative_error() const;
};

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    /// Entries compared per tensor; 0 checks every entry. Sampled entries are
    /// drawn from `seed`.
    std::size_t max_entries_per_tensor = 0;
    std::uint64_t seed = 7;
    /// Errors below this absolute difference count as zero. Guards entries
    /// whose true gradient is at the level of floating-point noise.
    double absolute_floor = 1e-9;
    /// Hook applied to the analytic gradient before comparison.
    std::function<void(ModelParams&)> tamper;
};

class GradMismatch : public ModelError {
public:
    GradMismatch(std::string tensor, GradCheckReport report);
    const std::string& tensor() const { return tensor_; }
    const GradCheckReport& report() const { return report_; }

private:
    std::string tensor_;
    GradCheckReport report_;
};

/// Compares pair_gradient with central finite differences; throws
/// GradMismatch naming the first tensor above tolerance.
GradCheckReport grad_check(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                           const TrainConfig& config, const GradCheckOptions& options = {});

// ---------------------------------------------------------------------------
// Training.

struct LabeledPair {
    std::size_t first = 0;
    std::size_t second = 0;
    int label = 0;

    bool operator==(const LabeledPair&) const = default;
};

struct PairDataset {
    std::span<const KnowledgeGraph> graphs;
    /// Pairs used in every epoch.
    std::vector<LabeledPair> fixed;
    /// Per-graph user id; required when sampled_negatives > 0.
    std::vector<int> user_of;
    /// Cross-user negative pairs drawn afresh each epoch.
    std::size_t sampled_negatives = 0;
};

struct AdamState {
    ModelParams first_moment;
    ModelParams second_moment;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState fresh(int heads);
    /// In-place update of params with gradient grad.
    void update(ModelParams& params, const ModelParams& grad, double learning_rate);
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainingLog {
    std::vector<EpochLog> epochs;
    int best_epoch = -1;
    double best_validation_loss = 0.0;
    bool early_stopped = false;
};

struct TrainResult {
    ModelParams params;  // best-validation checkpoint
    AdamState optimizer; // optimizer state at the best epoch
    TrainingLog log;
};

/// Called after every epoch with the freshly updated parameters.
using EpochObserver = std::function<void(const EpochLog&, const ModelParams&)>;

/// Adam on mean contrastive loss plus (weight_decay / 2)·||θ||². Early
/// stopping watches validation loss (training loss if `validation` has no
/// pairs). Throws ModelError(divergence) on a non-finite loss.
TrainResult train(const PairDataset& training, const PairDataset& validation, const TrainConfig& config,
                  const EpochObserver& observer = {});

/// Mean contrastive loss over the pairs, encoding each graph once.
double mean_pair_loss(const ModelParams& params, const PairDataset& data, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints.

struct Checkpoint {
    TrainConfig config;
    ModelParams params;
    AdamState optimizer;
    /// Free-form JSON object text (split policy, provenance).
    std::string metadata = "{}";
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

std::string train_config_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& json_text);

/// Lowercase SHA-256 hex digest of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Attention inspection.

struct AttentionDump {
    /// alpha[path][head][u] = list of (neighbor index, weight).
    std::array<std::vector<std::vector<std::vector<std::pair<int, double>>>>, kMetaPathCount> alpha;
    Eigen::Vector3d beta;
    Eigen::VectorXd gamma;
};

AttentionDump attention_of(const EncoderTrace& trace, const KnowledgeGraph& graph);

/// JSON document with both graphs' snapshots, α/β/γ and the pair distance.
std::string export_attention(const ModelParams& params, const TrainConfig& config, const KnowledgeGraph& g1,
                             const KnowledgeGraph& g2);

} // namespace siamhan
