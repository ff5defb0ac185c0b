#include "siamhan/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace siamhan {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ModelError(ModelErrc::bad_config, what); };
    if (!(eta > 0.0)) fail("eta must be positive");
    if (!(margin > eta)) fail("margin must exceed eta");
    if (heads < 1) fail("heads must be at least 1");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (weight_decay < 0.0) fail("weight_decay must be non-negative");
    if (patience < 1) fail("patience must be at least 1");
    if (max_epochs < 1) fail("max_epochs must be at least 1");
    if (batch_size < 1) fail("batch_size must be at least 1");
    if (!(leaky_relu_slope >= 0.0 && leaky_relu_slope < 1.0)) fail("leaky_relu_slope must lie in [0, 1)");
    if (!(init_scale >= 0.0)) fail("init_scale must be non-negative");
}

ModelParams ModelParams::zeros(int heads) {
    ModelParams p;
    p.heads = heads;
    const int emb = heads * kHiddenDim;
    for (int k = 0; k < kNodeKindCount; ++k) {
        p.proj_weight[k] = Eigen::MatrixXd::Zero(kHiddenDim, kAttributeLength);
        p.proj_bias[k] = Eigen::MatrixXd::Zero(kHiddenDim, 1);
    }
    for (auto& a : p.node_attention) {
        a = Eigen::MatrixXd::Zero(heads, 2 * kHiddenDim);
    }
    p.semantic_weight = Eigen::MatrixXd::Zero(kAttentionDim, emb);
    p.semantic_bias = Eigen::MatrixXd::Zero(kAttentionDim, 1);
    p.semantic_vector = Eigen::MatrixXd::Zero(kAttentionDim, 1);
    p.graph_weight = Eigen::MatrixXd::Zero(kAttentionDim, emb);
    p.graph_bias = Eigen::MatrixXd::Zero(kAttentionDim, 1);
    p.graph_vector = Eigen::MatrixXd::Zero(kAttentionDim, 1);
    return p;
}

ModelParams ModelParams::random(int heads, std::uint64_t seed, double scale) {
    ModelParams p = zeros(heads);
    std::mt19937_64 rng(seed);
    p.for_each([&](const std::string& name, Eigen::MatrixXd& t) {
        double bound = scale;
        if (scale == 0.0) {
            if (name.ends_with(".bias")) {
                return;
            }
            // attention rows and p/q are single vectors: fan_in = length, fan_out = 1
            bool vector = t.cols() == 1 || name.starts_with("node_attention");
            double fan_in = static_cast<double>(vector ? std::max(t.rows(), t.cols()) : t.cols());
            double fan_out = vector ? 1.0 : static_cast<double>(t.rows());
            bound = std::sqrt(6.0 / (fan_in + fan_out));
        }
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = dist(rng);
        }
    });
    return p;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

double ModelParams::squared_norm() const {
    double s = 0.0;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { s += t.squaredNorm(); });
    return s;
}

bool ModelParams::operator==(const ModelParams& other) const {
    if (heads != other.heads) {
        return false;
    }
    std::vector<const Eigen::MatrixXd*> mine;
    std::vector<const Eigen::MatrixXd*> theirs;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { mine.push_back(&t); });
    other.for_each([&](const std::string&, const Eigen::MatrixXd& t) { theirs.push_back(&t); });
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols() ||
            *mine[i] != *theirs[i]) {
            return false;
        }
    }
    return true;
}

} // namespace siamhan
