#pragma once

#include "siamhan/model.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace siamhan {

enum class TasksErrc { degenerate_ground_truth, bad_input };

class TasksError : public std::runtime_error {
public:
    TasksError(TasksErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    TasksErrc code() const noexcept { return code_; }

private:
    TasksErrc code_;
};

struct Verdict {
    std::size_t first = 0;
    std::size_t second = 0;
    double distance = 0.0;
    int related = 0;  // R: 1 iff distance < eta
};

struct UserGroup {
    int id = 0;
    std::vector<std::size_t> members;
    /// Mean distance to the group at the moment each member joined (0 for the founder).
    std::vector<double> join_distance;
};

/// Encodes each graph at most once under frozen parameters.
class EmbeddingCache {
public:
    EmbeddingCache(const ModelParams& params, const TrainConfig& config, std::span<const KnowledgeGraph> graphs);

    const Eigen::VectorXd& embedding(std::size_t i);
    double distance(std::size_t i, std::size_t j);
    std::size_t encode_count() const { return encodes_; }
    std::size_t size() const { return graphs_.size(); }

private:
    const ModelParams& params_;
    double slope_;
    std::span<const KnowledgeGraph> graphs_;
    std::vector<Eigen::VectorXd> cache_;
    std::vector<bool> ready_;
    std::size_t encodes_ = 0;
};

using IndexPair = std::pair<std::size_t, std::size_t>;

std::vector<Verdict> correlate_pairs(EmbeddingCache& cache, std::span<const IndexPair> pairs, double eta);
std::vector<Verdict> correlate_pairs(const ModelParams& params, const TrainConfig& config,
                                     std::span<const KnowledgeGraph> graphs, std::span<const IndexPair> pairs);
/// Every unordered pair i < j.
std::vector<IndexPair> all_pairs(std::size_t n);

/// dist(i, j) between tracking candidate i and test address j.
using CrossDistance = std::function<double(std::size_t, std::size_t)>;

/// result[i] = indices j of test addresses with verdict 1 against candidate i.
std::vector<std::vector<std::size_t>> track(const CrossDistance& dist, std::size_t candidates, std::size_t tests,
                                            double eta);
std::vector<std::vector<std::size_t>> track(const ModelParams& params, const TrainConfig& config,
                                            std::span<const KnowledgeGraph> candidates,
                                            std::span<const KnowledgeGraph> tests);

/// dist(i, j) between two discovery candidates.
using PairDistance = std::function<double(std::size_t, std::size_t)>;

struct DiscoverOptions {
    /// Compare against each group's first member only instead of the group mean.
    bool single_representative = false;
};

/// Greedy grouping in input order: join the group with the smallest mean
/// distance unless every mean exceeds eta (ties go to the lowest group id).
std::vector<UserGroup> discover(const PairDistance& dist, std::size_t candidates, double eta,
                                const DiscoverOptions& options = {});
std::vector<UserGroup> discover(const ModelParams& params, const TrainConfig& config,
                                std::span<const KnowledgeGraph> candidates, double eta,
                                const DiscoverOptions& options = {});

// ---------------------------------------------------------------------------
// Metrics.

struct RocPoint {
    double threshold = 0.0;  // pairs with distance <= threshold are declared related
    double fpr = 0.0;
    double tpr = 0.0;
};

struct Rates {
    double tpr = 0.0;
    double fpr = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// TPR/FPR of the verdict rule distance < eta.
Rates rates_at(std::span<const double> distances, std::span<const int> labels, double eta);

/// ROC obtained by sweeping the threshold over every distinct distance.
/// Throws TasksError(degenerate_ground_truth) unless both classes occur.
std::vector<RocPoint> roc_curve(std::span<const double> distances, std::span<const int> labels);
double auc(std::span<const RocPoint> roc);
double auc(std::span<const double> distances, std::span<const int> labels);
/// Largest TPR among ROC points with FPR <= max_fpr.
double tpr_at_fpr(std::span<const RocPoint> roc, double max_fpr);

/// Fraction of (candidate, test) pairs whose tracking verdict matches truth.
double tracking_accuracy(const std::vector<std::vector<std::size_t>>& tracked, std::span<const int> candidate_user,
                         std::span<const int> test_user);

/// Matched addresses / total under the group-to-user assignment that
/// maximizes total overlap (one user per group, one group per user).
double discovery_accuracy(const std::vector<UserGroup>& groups, std::span<const int> user_of);

/// Maximum-weight assignment on a dense rows x cols weight matrix. Returns
/// for each row the matched column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight);

} // namespace siamhan
