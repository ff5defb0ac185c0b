#include "siamhan/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace siamhan {

namespace {

std::vector<Eigen::MatrixXd*> tensors_of(ModelParams& p) {
    std::vector<Eigen::MatrixXd*> out;
    p.for_each([&](const std::string&, Eigen::MatrixXd& t) { out.push_back(&t); });
    return out;
}

std::vector<const Eigen::MatrixXd*> tensors_of(const ModelParams& p) {
    std::vector<const Eigen::MatrixXd*> out;
    p.for_each([&](const std::string&, const Eigen::MatrixXd& t) { out.push_back(&t); });
    return out;
}

std::vector<LabeledPair> sample_negatives(const PairDataset& data, std::mt19937_64& rng) {
    std::vector<LabeledPair> out;
    const std::size_t n = data.graphs.size();
    if (data.sampled_negatives == 0 || n < 2) {
        return out;
    }
    if (data.user_of.size() != n) {
        throw ModelError(ModelErrc::bad_config, "negative sampling needs one user id per graph");
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t max_attempts = 64 * data.sampled_negatives;
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < data.sampled_negatives; ++attempt) {
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (data.user_of[a] != data.user_of[b]) {
            out.push_back({a, b, 0});
        }
    }
    return out;
}

void require_finite(double v, int epoch) {
    if (!std::isfinite(v)) {
        throw ModelError(ModelErrc::divergence, "non-finite loss at epoch " + std::to_string(epoch));
    }
}

} // namespace

AdamState AdamState::fresh(int heads) {
    AdamState s;
    s.first_moment = ModelParams::zeros(heads);
    s.second_moment = ModelParams::zeros(heads);
    return s;
}

void AdamState::update(ModelParams& params, const ModelParams& grad, double learning_rate) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    auto p = tensors_of(params);
    auto g = tensors_of(grad);
    auto m = tensors_of(first_moment);
    auto v = tensors_of(second_moment);
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i]->array() = beta1 * m[i]->array() + (1.0 - beta1) * g[i]->array();
        v[i]->array() = beta2 * v[i]->array() + (1.0 - beta2) * g[i]->array().square();
        p[i]->array() -= learning_rate * (m[i]->array() / bc1) / ((v[i]->array() / bc2).sqrt() + epsilon);
    }
}

double mean_pair_loss(const ModelParams& params, const PairDataset& data, const TrainConfig& config) {
    if (data.fixed.empty()) {
        return 0.0;
    }
    std::map<std::size_t, Eigen::VectorXd> cache;
    auto embed = [&](std::size_t i) -> const Eigen::VectorXd& {
        auto it = cache.find(i);
        if (it == cache.end()) {
            it = cache.emplace(i, encode(params, data.graphs[i], config.leaky_relu_slope)).first;
        }
        return it->second;
    };
    double total = 0.0;
    for (const auto& pair : data.fixed) {
        double d = distance(embed(pair.first), embed(pair.second));
        total += contrastive_loss(d, pair.label, config.margin);
    }
    return total / static_cast<double>(data.fixed.size());
}

TrainResult train(const PairDataset& training, const PairDataset& validation, const TrainConfig& config,
                  const EpochObserver& observer) {
    config.validate();
    const double slope = config.leaky_relu_slope;
    std::mt19937_64 rng(config.rng_seed);

    ModelParams params = ModelParams::random(config.heads, config.rng_seed, config.init_scale);
    AdamState adam = AdamState::fresh(config.heads);

    TrainResult result{params, adam, {}};
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<LabeledPair> pairs = training.fixed;
        auto negatives = sample_negatives(training, rng);
        pairs.insert(pairs.end(), negatives.begin(), negatives.end());
        std::shuffle(pairs.begin(), pairs.end(), rng);

        double epoch_loss = 0.0;
        const auto batch = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0; start < pairs.size(); start += batch) {
            const std::size_t end = std::min(pairs.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(end - start);

            std::map<std::size_t, EncoderTrace> traces;
            for (std::size_t i = start; i < end; ++i) {
                for (std::size_t g : {pairs[i].first, pairs[i].second}) {
                    if (!traces.count(g)) {
                        traces.emplace(g, encode_trace(params, training.graphs[g], slope));
                    }
                }
            }

            std::map<std::size_t, Eigen::VectorXd> d_embedding;
            for (auto& [g, trace] : traces) {
                d_embedding[g] = Eigen::VectorXd::Zero(trace.embedding().size());
            }
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& pr = pairs[i];
                Eigen::VectorXd diff = traces.at(pr.first).embedding() - traces.at(pr.second).embedding();
                const double d = diff.norm();
                batch_loss += contrastive_loss(d, pr.label, config.margin);
                Eigen::VectorXd grad_first;
                if (pr.label == 1) {
                    grad_first = 2.0 * diff;
                } else if (d < config.margin && d > 0.0) {
                    grad_first = (-2.0 * (config.margin - d) / d) * diff;
                } else {
                    continue;
                }
                d_embedding[pr.first] += scale * grad_first;
                d_embedding[pr.second] -= scale * grad_first;
            }
            require_finite(batch_loss, epoch);
            epoch_loss += batch_loss;

            ModelParams grad = ModelParams::zeros(config.heads);
            for (auto& [g, trace] : traces) {
                backpropagate(params, training.graphs[g], trace, d_embedding[g], slope, grad);
            }
            if (config.weight_decay > 0.0) {
                auto gt = tensors_of(grad);
                auto pt = tensors_of(std::as_const(params));
                for (std::size_t i = 0; i < gt.size(); ++i) {
                    *gt[i] += config.weight_decay * *pt[i];
                }
            }
            adam.update(params, grad, config.learning_rate);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = pairs.empty() ? 0.0 : epoch_loss / static_cast<double>(pairs.size());
        entry.validation_loss =
            validation.fixed.empty() ? mean_pair_loss(params, training, config) : mean_pair_loss(params, validation, config);
        require_finite(entry.validation_loss, epoch);
        result.log.epochs.push_back(entry);
        if (observer) {
            observer(entry, params);
        }

        if (entry.validation_loss < best) {
            best = entry.validation_loss;
            result.params = params;
            result.optimizer = adam;
            result.log.best_epoch = epoch;
            result.log.best_validation_loss = best;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.log.early_stopped = true;
            break;
        }
    }
    return result;
}

} // namespace siamhan
