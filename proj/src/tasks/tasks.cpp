#include "siamhan/tasks.hpp"

#include <limits>

namespace siamhan {

EmbeddingCache::EmbeddingCache(const ModelParams& params, const TrainConfig& config,
                               std::span<const KnowledgeGraph> graphs)
    : params_(params),
      slope_(config.leaky_relu_slope),
      graphs_(graphs),
      cache_(graphs.size()),
      ready_(graphs.size(), false) {}

const Eigen::VectorXd& EmbeddingCache::embedding(std::size_t i) {
    if (!ready_.at(i)) {
        cache_[i] = encode(params_, graphs_[i], slope_);
        ready_[i] = true;
        ++encodes_;
    }
    return cache_[i];
}

double EmbeddingCache::distance(std::size_t i, std::size_t j) {
    return siamhan::distance(embedding(i), embedding(j));
}

std::vector<IndexPair> all_pairs(std::size_t n) {
    std::vector<IndexPair> out;
    out.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            out.emplace_back(i, j);
        }
    }
    return out;
}

std::vector<Verdict> correlate_pairs(EmbeddingCache& cache, std::span<const IndexPair> pairs, double eta) {
    std::vector<Verdict> out;
    out.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        double d = cache.distance(a, b);
        out.push_back({a, b, d, verdict(d, eta)});
    }
    return out;
}

std::vector<Verdict> correlate_pairs(const ModelParams& params, const TrainConfig& config,
                                     std::span<const KnowledgeGraph> graphs, std::span<const IndexPair> pairs) {
    EmbeddingCache cache(params, config, graphs);
    return correlate_pairs(cache, pairs, config.eta);
}

std::vector<std::vector<std::size_t>> track(const CrossDistance& dist, std::size_t candidates, std::size_t tests,
                                            double eta) {
    std::vector<std::vector<std::size_t>> out(candidates);
    for (std::size_t i = 0; i < candidates; ++i) {
        for (std::size_t j = 0; j < tests; ++j) {
            if (verdict(dist(i, j), eta) == 1) {
                out[i].push_back(j);
            }
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> track(const ModelParams& params, const TrainConfig& config,
                                            std::span<const KnowledgeGraph> candidates,
                                            std::span<const KnowledgeGraph> tests) {
    EmbeddingCache s(params, config, candidates);
    EmbeddingCache t(params, config, tests);
    return track([&](std::size_t i, std::size_t j) { return siamhan::distance(s.embedding(i), t.embedding(j)); },
                 candidates.size(), tests.size(), config.eta);
}

std::vector<UserGroup> discover(const PairDistance& dist, std::size_t candidates, double eta,
                                const DiscoverOptions& options) {
    std::vector<UserGroup> groups;
    if (candidates == 0) {
        return groups;
    }
    groups.push_back({1, {0}, {0.0}});
    for (std::size_t i = 1; i < candidates; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_group = 0;
        for (std::size_t k = 0; k < groups.size(); ++k) {
            const auto& members = groups[k].members;
            double mean = 0.0;
            if (options.single_representative) {
                mean = dist(i, members.front());
            } else {
                for (auto m : members) {
                    mean += dist(i, m);
                }
                mean /= static_cast<double>(members.size());
            }
            if (mean < best) {
                best = mean;
                best_group = k;
            }
        }
        if (best > eta) {
            groups.push_back({static_cast<int>(groups.size()) + 1, {i}, {0.0}});
        } else {
            groups[best_group].members.push_back(i);
            groups[best_group].join_distance.push_back(best);
        }
    }
    return groups;
}

std::vector<UserGroup> discover(const ModelParams& params, const TrainConfig& config,
                                std::span<const KnowledgeGraph> candidates, double eta,
                                const DiscoverOptions& options) {
    EmbeddingCache cache(params, config, candidates);
    return discover([&](std::size_t i, std::size_t j) { return cache.distance(i, j); }, candidates.size(), eta,
                    options);
}

} // namespace siamhan
